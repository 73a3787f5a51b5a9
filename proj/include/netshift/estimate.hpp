// Point estimators (plug-in, one-step, TMLE), the network-dependent variance,
// and Wald intervals.
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netshift/jsonutil.hpp"
#include "netshift/network.hpp"
#include "netshift/nuisance.hpp"
#include "netshift/summary.hpp"

namespace netshift {

struct EifComponents {
  std::vector<double> phi;       // rho*(y - m_nat) + m_shift
  std::vector<double> centered;  // phi minus its degree-stratum mean
  std::map<int, double> strata_means;  // stratum key -> mean used for centering
  double global_mean = 0.0;
};

// Degree-stratum centering; strata with fewer than 2 units fall back to the
// global mean. degree_bin > 1 merges strata by integer division of degree.
EifComponents eif_components(const NuisanceFit& nf, const std::vector<double>& y,
                             const std::vector<int>& degree, int degree_bin = 1);

// Same centering applied to an externally computed EIF vector (the simulation
// harness centers the true-nuisance EIF this way).
EifComponents center_components(std::vector<double> phi, const std::vector<int>& degree,
                                int degree_bin = 1);

struct VarianceResult {
  double value = 0.0;  // the (1/n^2) double sum over dependent pairs
  bool floored = false;
};

// Truncated quadratic form over the two-hop dependency mask; when the full
// sum is nonpositive it is floored at the diagonal-only sum and flagged.
VarianceResult dependency_variance(const EifComponents& eif, const DependencyStructure& dep);

// Wald interval; sigma2 is in the n-scaled convention, half-width
// z_{1-alpha/2} * sqrt(sigma2 / n). Throws for alpha outside (0, 1).
std::pair<double, double> confidence_interval(double psi, double sigma2, int n, double alpha);

enum class TmleMode { kWeightedIntercept, kCovariate };

struct EstimationOptions {
  double alpha = 0.05;
  TmleMode tmle_mode = TmleMode::kWeightedIntercept;
  int tmle_max_iterations = 100;
  double tmle_score_tolerance = 1e-10;
  double positivity_tolerance = 0.05;
  int degree_bin = 1;
};

struct EstimateResult {
  std::string method;  // "plugin" | "one-step" | "tmle"
  double psi = 0.0;
  bool has_variance = false;
  double variance = 0.0;  // n-scaled: se = sqrt(variance / n)
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  int n = 0;
  int k_max = 0;
  // diagnostics
  double eif_residual = 0.0;  // |mean(phi) - psi|
  int clip_count = 0;
  bool variance_floored = false;
  PositivityReport positivity;
  double epsilon = 0.0;  // TMLE fluctuation
  int tmle_iterations = 0;
  std::string selected_m;
  std::string selected_r;

  Json to_json() const;
};

// Plug-in mean of the shifted predictions; carries no variance.
EstimateResult plugin(const SummarizedFrame& sf, const NuisanceFit& nf,
                      const DependencyStructure& dep, const EstimationOptions& opt = {});

EstimateResult one_step(const SummarizedFrame& sf, const NuisanceFit& nf,
                        const DependencyStructure& dep, const EstimationOptions& opt = {});

EstimateResult tmle(const SummarizedFrame& sf, const NuisanceFit& nf,
                    const DependencyStructure& dep, const EstimationOptions& opt = {});

}  // namespace netshift
