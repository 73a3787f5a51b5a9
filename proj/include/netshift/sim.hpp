// Simulation harness: data-generating processes with known structural
// equations, Monte Carlo ground truth, the true-nuisance efficiency bound,
// and the benchmark sweep.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netshift/estimate.hpp"
#include "netshift/frame.hpp"
#include "netshift/network.hpp"
#include "netshift/nuisance.hpp"
#include "netshift/policy.hpp"
#include "netshift/summary.hpp"

namespace netshift {

// Structural pieces of the synthetic nonlinear DGP, exposed for tests.
double synthetic_m_l(double l1, double l2, double l3, double l4);
double synthetic_m_a(double a);
double synthetic_m_as(double a_s);

// Nonlinear four-covariate DGP over a fixed network:
//   L1 ~ Beta(3,2), L2 ~ Poisson(100), L3 ~ Gamma(2,4), L4 ~ Bernoulli(0.6)
//   A ~ Normal(m_L - 5, 1), A_s = neighbor sum
//   Y ~ Normal(m_L*(1 + 0.2*m_A + m_As) + 5, 2) truncated at +/-6 SD.
Frame dgp_synthetic(const Network& net, uint64_t seed);

struct LinearDgpParams {
  int covariates = 16;
  std::vector<double> beta;  // empty means all ones
  double scale = 1.0;        // scales both -50 intercepts
  // When true, covariates are drawn once from covariate_seed and held fixed
  // across replicates (the semi-synthetic design conditions on L).
  bool fixed_covariates = true;
  uint64_t covariate_seed = 0;
};

// Linear-network DGP with standard-normal covariates:
//   A ~ Normal(sum_k beta_k L_k - 50*scale, 1), A_s = neighbor sum
//   Y ~ Normal(A + A_s + sum_k beta_k L_k + sum_k beta_k L_k^s - 50*scale, 1)
//   truncated at +/-6 SD, with L^s the neighbor sums of the covariates.
Frame dgp_linear(const Network& net, const LinearDgpParams& params, uint64_t seed);

struct DgpSpec {
  enum class Kind { kSyntheticNonlinear, kLinearNetwork };
  Kind kind = Kind::kSyntheticNonlinear;
  LinearDgpParams linear;

  static DgpSpec from_json(const Json& j);
  Json to_json() const;
};

Frame draw_frame(const DgpSpec& dgp, const Network& net, uint64_t seed);

struct GroundTruth {
  double psi = 0.0;
  double mc_se = 0.0;
  int reps = 0;
  bool low_rep_warning = false;
};

// Monte Carlo estimate of psi_n: per replicate, draw (L, A), substitute the
// induced summary s(d(A)) into the outcome equation's summary slot, draw Y,
// and average over units. The summary spec must match the structural
// neighbor-sum summary for the result to be the estimand.
GroundTruth ground_truth(const DgpSpec& dgp, const Policy& policy, const SummarySpec& spec,
                         const Network& net, int reps, uint64_t seed);

// Closed-form nuisances of the shipped DGPs evaluated on one dataset:
// the conditional mean at natural and shifted features and the shifted-to-
// natural summary-density ratio (Gaussian exposure model). Available for
// additive and multiplicative policies over the plain neighbor-sum summary.
struct TrueNuisances {
  std::vector<double> m_natural;
  std::vector<double> m_shifted;
  std::vector<double> rho;          // ratio at the natural summary
  std::vector<double> rho_shifted;  // ratio at the shifted summary
};
TrueNuisances true_nuisances(const DgpSpec& dgp, const Policy& policy, const SummarySpec& spec,
                             const Network& net, const Frame& frame);

// Wraps true nuisances as a NuisanceFit so the estimators accept them.
NuisanceFit as_nuisance_fit(const TrueNuisances& tn);

struct EfficiencyBound {
  double value = 0.0;  // mean over replicates of the true-EIF dependency variance
  double mc_se = 0.0;
  int reps = 0;
};

// Finite-sample efficiency bound: the dependency variance of the true-
// nuisance EIF, averaged over simulated replicates.
EfficiencyBound efficiency_bound(const DgpSpec& dgp, const Policy& policy,
                                 const SummarySpec& spec, const Network& net, int reps,
                                 uint64_t seed);

// Main-terms OLS comparator: regress Y on (A, L), read the effect off the
// exposure coefficient, with the homoskedastic linear-form variance.
EstimateResult ols_estimate(const Frame& frame, const Policy& policy, double alpha = 0.05);

struct NetworkSpec {
  std::string kind;  // "erdos-renyi" | "watts-strogatz" | "scale-free"
  double er_p = -1.0;  // <= 0 means the 3/n default
  int ws_k = 6;
  double ws_beta = 0.5;
  double sf_lambda = 3.5;
  int sf_m = 2;

  Network build(int n, uint64_t seed) const;
  static NetworkSpec from_json(const Json& j);
  Json to_json() const;
};

struct EstimatorSpec {
  std::string label;
  std::string method;  // "plugin" | "one-step" | "tmle" | "iid-tmle" | "ols"
  std::vector<LearnerSpec> m_library;  // empty means the default library
  std::vector<LearnerSpec> r_library;
  TmleMode tmle_mode = TmleMode::kWeightedIntercept;

  static EstimatorSpec from_json(const Json& j);
  Json to_json() const;
};

struct BenchmarkConfig {
  std::vector<NetworkSpec> networks;
  std::vector<int> sizes;
  int replicates = 200;
  int truth_reps = 400;
  DgpSpec dgp;
  std::optional<Policy> policy;  // required; optional only for default construction
  SummarySpec summary;
  std::vector<EstimatorSpec> estimators;
  int folds = 5;
  double alpha = 0.05;
  double clip_lo = 1e-3;
  double clip_hi = 1e3;
  int threads = 0;  // 0 means hardware concurrency
  uint64_t seed = 1;

  static BenchmarkConfig from_json(const Json& j);
  Json to_json() const;
};

struct ReplicateRecord {
  std::string network;
  int n = 0;
  int replicate = 0;
  std::string method;
  bool failed = false;
  std::string error;
  double psi = 0.0;
  bool has_variance = false;
  double variance = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
  double truth = 0.0;
  double eif_residual = 0.0;    // |mean(phi)-psi| from the underlying estimate
  int purity_violations = 0;    // cross-fit audit violations across both nuisances

  Json to_json() const;
};

struct AggregateRow {
  std::string network;
  int n = 0;
  std::string method;
  std::string learner;
  int replicates = 0;
  int failures = 0;
  double truth = 0.0;
  double truth_mc_se = 0.0;
  double bias_pct = 0.0;
  double scaled_bias = 0.0;  // sqrt(n)/log(n) * |mean(psi_hat) - truth|
  double mse = 0.0;
  double scaled_mse = 0.0;  // n/log(n)^2 * mse
  double variance = 0.0;    // empirical variance of psi_hat across replicates
  double mean_model_variance = 0.0;  // mean of sigma2/n, the estimated Var(psi_hat)
  double coverage_pct = 0.0;
  double ci_width = 0.0;

  Json to_json() const;
};

struct BenchmarkResult {
  std::vector<ReplicateRecord> records;
  std::vector<AggregateRow> aggregates;

  Json aggregates_to_json() const;
  std::string aggregates_to_csv() const;
};

// Full factorial sweep over networks x sizes x estimators. Per cell the
// network and (for the fixed-covariate linear DGP) the covariates are drawn
// once, the cell ground truth is computed by Monte Carlo, and each replicate
// derives an independent substream so results do not depend on thread count.
// Replicate failures are recorded and the sweep continues.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

}  // namespace netshift
