#include "netshift/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "netshift/parallel.hpp"
#include "netshift/rng.hpp"
#include "netshift/stats.hpp"

namespace netshift {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double ind(bool b) { return b ? 1.0 : 0.0; }

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

Json jnum(double x) {
  if (std::isfinite(x)) return Json(x);
  return Json();  // null
}

// Per-unit weighted covariate sums sum_k beta_k * L_ik of a frame whose
// columns are all numeric covariates.
std::vector<double> weighted_row_sums(const Frame& f, const std::vector<double>& beta) {
  const int n = f.n();
  const int p = f.covariate_count();
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int k = 0; k < p; ++k) {
    const auto& col = f.covariate(k);
    const double b = beta.empty() ? 1.0 : beta[static_cast<size_t>(k)];
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] += b * col[static_cast<size_t>(i)];
  }
  return out;
}

std::vector<double> neighbor_sums(const Network& net, const std::vector<double>& x) {
  const int n = net.size();
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& [j, w] : net.neighbors(i)) {
      (void)w;
      s += x[static_cast<size_t>(j)];
    }
    out[static_cast<size_t>(i)] = s;
  }
  return out;
}

std::vector<double> resolved_beta(const LinearDgpParams& p) {
  if (p.beta.empty()) return std::vector<double>(static_cast<size_t>(p.covariates), 1.0);
  return p.beta;
}

void validate_linear_params(const LinearDgpParams& p) {
  if (p.covariates < 1)
    throw std::invalid_argument("dgp_linear: covariates must be >= 1");
  if (!p.beta.empty() && static_cast<int>(p.beta.size()) != p.covariates)
    throw std::invalid_argument("dgp_linear: beta length must match the covariate count");
  if (!std::isfinite(p.scale)) throw std::invalid_argument("dgp_linear: scale must be finite");
  for (double b : p.beta)
    if (!std::isfinite(b)) throw std::invalid_argument("dgp_linear: beta must be finite");
}

// Conditional outcome means with an arbitrary vector in the summary slot.
// Own exposures stay at their drawn values; this is exactly the substitution
// that defines the estimand.
std::vector<double> outcome_means(const DgpSpec& dgp, const Network& net, const Frame& f,
                                  const std::vector<double>& summary_slot) {
  const int n = f.n();
  std::vector<double> mu(static_cast<size_t>(n));
  if (dgp.kind == DgpSpec::Kind::kSyntheticNonlinear) {
    const auto& l1 = f.covariate("L1");
    const auto& l2 = f.covariate("L2");
    const auto& l3 = f.covariate("L3");
    const auto& l4 = f.covariate("L4");
    const auto& a = f.exposure();
    for (int i = 0; i < n; ++i) {
      const size_t u = static_cast<size_t>(i);
      const double ml = synthetic_m_l(l1[u], l2[u], l3[u], l4[u]);
      mu[u] = ml * (1.0 + 0.2 * synthetic_m_a(a[u]) + synthetic_m_as(summary_slot[u])) + 5.0;
    }
  } else {
    const auto beta = resolved_beta(dgp.linear);
    const double c = -50.0 * dgp.linear.scale;
    const auto lsum = weighted_row_sums(f, beta);
    const auto lssum = neighbor_sums(net, lsum);
    const auto& a = f.exposure();
    for (int i = 0; i < n; ++i) {
      const size_t u = static_cast<size_t>(i);
      mu[u] = a[u] + summary_slot[u] + lsum[u] + lssum[u] + c;
    }
  }
  return mu;
}

double outcome_sd(const DgpSpec& dgp) {
  return dgp.kind == DgpSpec::Kind::kSyntheticNonlinear ? 2.0 : 1.0;
}

double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.9189385332046727;  // log sqrt(2 pi)
}

// Density ratio of the shifted to the natural neighbor-sum distribution at
// point a, for a Gaussian exposure model A_j ~ N(eta_j, 1):
// natural A_s ~ N(mu, deg); additive shift moves the mean by delta*deg;
// multiplicative shift scales both mean and sd by delta.
double gaussian_summary_ratio(const Policy& policy, double a, double mu, int deg) {
  if (deg == 0) return 1.0;
  const double sd = std::sqrt(static_cast<double>(deg));
  double mean_s = mu;
  double sd_s = sd;
  if (policy.kind() == PolicyKind::kAdditive) {
    mean_s = mu + policy.delta() * deg;
  } else {
    mean_s = policy.delta() * mu;
    sd_s = policy.delta() * sd;
  }
  return std::exp(normal_log_pdf(a, mean_s, sd_s) - normal_log_pdf(a, mu, sd));
}

void require_structural_summary(const SummarySpec& spec, const std::string& where) {
  if (spec.kind != SummaryKind::kNeighborSum || spec.include_self || spec.normalize)
    throw std::runtime_error(where +
                             ": closed-form nuisances exist only for the plain neighbor-sum "
                             "summary");
}

}  // namespace

double synthetic_m_l(double l1, double l2, double l3, double l4) {
  const double low = ind(l1 > 0.3) + ind(l2 > 90.0) + ind(l3 > 5.0);
  const double mid = ind(l1 > 0.5) + ind(l2 > 100.0) + ind(l3 > 10.0);
  const double high = ind(l1 > 0.7) + ind(l2 > 110.0) + ind(l3 > 15.0);
  return (1.0 + l4) * (-2.0 * low - mid + 2.0 * high);
}

double synthetic_m_a(double a) {
  return -2.0 * ind(a > -2.0) - ind(a > 1.0) + 3.0 * ind(a > 3.0);
}

double synthetic_m_as(double a_s) {
  return 3.0 * ind(a_s > 0.0) + ind(a_s > 6.0) + ind(a_s > 12.0);
}

Frame dgp_synthetic(const Network& net, uint64_t seed) {
  const int n = net.size();
  Rng root(seed);
  Rng cov = root.substream("covariates");
  Rng expo = root.substream("exposure");
  Rng out = root.substream("outcome");

  std::vector<std::vector<double>> cols(4, std::vector<double>(static_cast<size_t>(n)));
  std::vector<double> a(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const size_t u = static_cast<size_t>(i);
    cols[0][u] = cov.beta(3.0, 2.0);
    cols[1][u] = static_cast<double>(cov.poisson(100.0));
    cols[2][u] = cov.gamma(2.0, 4.0);
    cols[3][u] = cov.bernoulli(0.6) ? 1.0 : 0.0;
    const double ml = synthetic_m_l(cols[0][u], cols[1][u], cols[2][u], cols[3][u]);
    a[u] = expo.normal(ml - 5.0, 1.0);
  }
  const auto a_s = neighbor_sums(net, a);
  std::vector<double> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const size_t u = static_cast<size_t>(i);
    const double ml = synthetic_m_l(cols[0][u], cols[1][u], cols[2][u], cols[3][u]);
    const double mu = ml * (1.0 + 0.2 * synthetic_m_a(a[u]) + synthetic_m_as(a_s[u])) + 5.0;
    y[u] = out.truncated_normal(mu, 2.0);
  }
  return Frame({"L1", "L2", "L3", "L4"}, std::move(cols), std::move(a), std::move(y));
}

Frame dgp_linear(const Network& net, const LinearDgpParams& params, uint64_t seed) {
  validate_linear_params(params);
  const int n = net.size();
  const int p = params.covariates;
  const auto beta = resolved_beta(params);
  const double c = -50.0 * params.scale;

  Rng cov = Rng(params.fixed_covariates ? params.covariate_seed : seed).substream("covariates");
  Rng expo = Rng(seed).substream("exposure");
  Rng out = Rng(seed).substream("outcome");

  std::vector<std::string> names(static_cast<size_t>(p));
  std::vector<std::vector<double>> cols(static_cast<size_t>(p),
                                        std::vector<double>(static_cast<size_t>(n)));
  for (int k = 0; k < p; ++k) names[static_cast<size_t>(k)] = "L" + std::to_string(k + 1);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < p; ++k) cols[static_cast<size_t>(k)][static_cast<size_t>(i)] = cov.normal();

  std::vector<double> lsum(static_cast<size_t>(n), 0.0);
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < n; ++i)
      lsum[static_cast<size_t>(i)] +=
          beta[static_cast<size_t>(k)] * cols[static_cast<size_t>(k)][static_cast<size_t>(i)];

  std::vector<double> a(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const size_t u = static_cast<size_t>(i);
    a[u] = expo.normal(lsum[u] + c, 1.0);
  }
  const auto a_s = neighbor_sums(net, a);
  const auto lssum = neighbor_sums(net, lsum);
  std::vector<double> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const size_t u = static_cast<size_t>(i);
    y[u] = out.truncated_normal(a[u] + a_s[u] + lsum[u] + lssum[u] + c, 1.0);
  }
  return Frame(std::move(names), std::move(cols), std::move(a), std::move(y));
}

DgpSpec DgpSpec::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("dgp: expected an object with a string 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  DgpSpec spec;
  if (kind == "synthetic-nonlinear") {
    require_keys(j, {"kind"}, "dgp");
    spec.kind = Kind::kSyntheticNonlinear;
    return spec;
  }
  if (kind == "linear-network") {
    require_keys(j, {"kind", "covariates", "beta", "scale", "fixed_covariates"}, "dgp");
    spec.kind = Kind::kLinearNetwork;
    if (j.contains("covariates"))
      spec.linear.covariates = static_cast<int>(require_number(j, "covariates", "dgp"));
    if (j.contains("beta")) {
      if (!j.at("beta").is_array()) throw ConfigError("dgp: 'beta' must be an array of numbers");
      for (const auto& b : j.at("beta")) {
        if (!b.is_number()) throw ConfigError("dgp: 'beta' must be an array of numbers");
        spec.linear.beta.push_back(b.get<double>());
      }
    }
    if (j.contains("scale")) spec.linear.scale = require_number(j, "scale", "dgp");
    if (j.contains("fixed_covariates")) {
      if (!j.at("fixed_covariates").is_boolean())
        throw ConfigError("dgp: 'fixed_covariates' must be a boolean");
      spec.linear.fixed_covariates = j.at("fixed_covariates").get<bool>();
    }
    try {
      validate_linear_params(spec.linear);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("dgp: ") + e.what());
    }
    return spec;
  }
  throw ConfigError("dgp: unknown kind '" + kind + "'");
}

Json DgpSpec::to_json() const {
  Json j;
  if (kind == Kind::kSyntheticNonlinear) {
    j["kind"] = "synthetic-nonlinear";
    return j;
  }
  j["kind"] = "linear-network";
  j["covariates"] = linear.covariates;
  if (!linear.beta.empty()) j["beta"] = linear.beta;
  j["scale"] = linear.scale;
  j["fixed_covariates"] = linear.fixed_covariates;
  return j;
}

Frame draw_frame(const DgpSpec& dgp, const Network& net, uint64_t seed) {
  if (dgp.kind == DgpSpec::Kind::kSyntheticNonlinear) return dgp_synthetic(net, seed);
  return dgp_linear(net, dgp.linear, seed);
}

GroundTruth ground_truth(const DgpSpec& dgp, const Policy& policy, const SummarySpec& spec,
                         const Network& net, int reps, uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("ground_truth: reps must be >= 1");
  if (net.size() < 1) throw std::invalid_argument("ground_truth: empty network");
  GroundTruth gt;
  gt.reps = reps;
  gt.low_rep_warning = reps < 100;

  Rng root(seed);
  const double sd = outcome_sd(dgp);
  std::vector<double> rep_means(static_cast<size_t>(reps));
  for (int k = 0; k < reps; ++k) {
    const uint64_t rep_seed = root.substream("truth-rep").substream(static_cast<uint64_t>(k)).next();
    const Frame f = draw_frame(dgp, net, rep_seed);
    const SummarizedFrame sf = summarize(f, net, spec, policy);
    const auto mu = outcome_means(dgp, net, f, sf.a_s_d);
    Rng cf = Rng(rep_seed).substream("cf-outcome");
    double total = 0.0;
    for (double m : mu) total += cf.truncated_normal(m, sd);
    rep_means[static_cast<size_t>(k)] = total / static_cast<double>(net.size());
  }
  gt.psi = mean(rep_means);
  gt.mc_se = reps > 1 ? std::sqrt(sample_variance(rep_means) / static_cast<double>(reps)) : 0.0;
  return gt;
}

TrueNuisances true_nuisances(const DgpSpec& dgp, const Policy& policy, const SummarySpec& spec,
                             const Network& net, const Frame& frame) {
  require_structural_summary(spec, "true_nuisances");
  if (policy.kind() == PolicyKind::kPiecewiseAdditive)
    throw std::runtime_error(
        "true_nuisances: no closed form for piecewise policies (the shifted summary is not "
        "Gaussian)");
  const int n = frame.n();
  if (net.size() != n) throw std::invalid_argument("true_nuisances: frame/network size mismatch");

  const SummarizedFrame sf = summarize(frame, net, spec, policy);
  TrueNuisances tn;
  tn.m_natural.resize(static_cast<size_t>(n));
  tn.m_shifted.resize(static_cast<size_t>(n));
  tn.rho.resize(static_cast<size_t>(n));
  tn.rho_shifted.resize(static_cast<size_t>(n));

  if (dgp.kind == DgpSpec::Kind::kSyntheticNonlinear) {
    const auto& l1 = frame.covariate("L1");
    const auto& l2 = frame.covariate("L2");
    const auto& l3 = frame.covariate("L3");
    const auto& l4 = frame.covariate("L4");
    std::vector<double> ml(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const size_t u = static_cast<size_t>(i);
      ml[u] = synthetic_m_l(l1[u], l2[u], l3[u], l4[u]);
    }
    // E[m_A(A) | L] for A ~ N(m_L - 5, 1): each indicator I(A > c) integrates
    // to Phi(m_L - 5 - c).
    auto h = [](double m) {
      return -2.0 * normal_cdf(m - 3.0) - normal_cdf(m - 6.0) + 3.0 * normal_cdf(m - 8.0);
    };
    std::vector<double> mu_shift(static_cast<size_t>(n), 0.0);  // E[A_s | L]
    for (int i = 0; i < n; ++i) {
      double mu = 0.0;
      for (const auto& [j, w] : net.neighbors(i)) {
        (void)w;
        mu += ml[static_cast<size_t>(j)] - 5.0;
      }
      mu_shift[static_cast<size_t>(i)] = mu;
    }
    for (int i = 0; i < n; ++i) {
      const size_t u = static_cast<size_t>(i);
      const double base = 1.0 + 0.2 * h(ml[u]);
      tn.m_natural[u] = ml[u] * (base + synthetic_m_as(sf.a_s[u])) + 5.0;
      tn.m_shifted[u] = ml[u] * (base + synthetic_m_as(sf.a_s_d[u])) + 5.0;
      tn.rho[u] = gaussian_summary_ratio(policy, sf.a_s[u], mu_shift[u], sf.degree[u]);
      tn.rho_shifted[u] = gaussian_summary_ratio(policy, sf.a_s_d[u], mu_shift[u], sf.degree[u]);
    }
    return tn;
  }

  validate_linear_params(dgp.linear);
  if (frame.covariate_count() != dgp.linear.covariates)
    throw std::invalid_argument("true_nuisances: frame does not match the linear dgp spec");
  const auto beta = resolved_beta(dgp.linear);
  const double c = -50.0 * dgp.linear.scale;
  const auto lsum = weighted_row_sums(frame, beta);
  const auto lssum = neighbor_sums(net, lsum);
  for (int i = 0; i < n; ++i) {
    const size_t u = static_cast<size_t>(i);
    // E[Y | a_s, L] = E[A | L] + a_s + lsum + lssum + c, and E[A | L] = lsum + c.
    tn.m_natural[u] = sf.a_s[u] + 2.0 * lsum[u] + lssum[u] + 2.0 * c;
    tn.m_shifted[u] = sf.a_s_d[u] + 2.0 * lsum[u] + lssum[u] + 2.0 * c;
    const double mu = lssum[u] + c * sf.degree[u];  // E[A_s | L]
    tn.rho[u] = gaussian_summary_ratio(policy, sf.a_s[u], mu, sf.degree[u]);
    tn.rho_shifted[u] = gaussian_summary_ratio(policy, sf.a_s_d[u], mu, sf.degree[u]);
  }
  return tn;
}

NuisanceFit as_nuisance_fit(const TrueNuisances& tn) {
  NuisanceFit nf;
  nf.m.m_natural = tn.m_natural;
  nf.m.m_shifted = tn.m_shifted;
  nf.m.selected = -1;
  nf.m.selected_name = "oracle";
  nf.r.rho = tn.rho;
  nf.r.rho_shifted = tn.rho_shifted;
  nf.r.selected = -1;
  nf.r.selected_name = "oracle";
  const size_t n = tn.m_natural.size();
  nf.m.audit.producing_fold.assign(n, -1);
  nf.r.audit.producing_fold.assign(n, -1);
  return nf;
}

EfficiencyBound efficiency_bound(const DgpSpec& dgp, const Policy& policy,
                                 const SummarySpec& spec, const Network& net, int reps,
                                 uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("efficiency_bound: reps must be >= 1");
  require_structural_summary(spec, "efficiency_bound");
  const int n = net.size();
  const DependencyStructure dep(net);
  std::vector<int> degree(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) degree[static_cast<size_t>(i)] = net.degree(i);

  Rng root(seed);
  std::vector<double> vals(static_cast<size_t>(reps));
  for (int k = 0; k < reps; ++k) {
    const uint64_t rep_seed =
        root.substream("bound-rep").substream(static_cast<uint64_t>(k)).next();
    const Frame f = draw_frame(dgp, net, rep_seed);
    const TrueNuisances tn = true_nuisances(dgp, policy, spec, net, f);
    const auto& y = f.outcome();
    std::vector<double> phi(static_cast<size_t>(n));
    for (size_t u = 0; u < phi.size(); ++u)
      phi[u] = tn.rho[u] * (y[u] - tn.m_natural[u]) + tn.m_shifted[u];
    const EifComponents comp = center_components(std::move(phi), degree);
    vals[static_cast<size_t>(k)] = dependency_variance(comp, dep).value;
  }
  EfficiencyBound eb;
  eb.reps = reps;
  eb.value = mean(vals);
  eb.mc_se = reps > 1 ? std::sqrt(sample_variance(vals) / static_cast<double>(reps)) : 0.0;
  return eb;
}

EstimateResult ols_estimate(const Frame& frame, const Policy& policy, double alpha) {
  if (!frame.has_outcome()) throw std::invalid_argument("ols_estimate: frame has no outcome");
  if (policy.kind() == PolicyKind::kPiecewiseAdditive)
    throw std::invalid_argument(
        "ols_estimate: the regression comparator supports additive and multiplicative policies");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("ols_estimate: alpha must be in (0, 1)");
  const int n = frame.n();
  const int p = frame.covariate_count();
  const int d = p + 2;  // intercept, exposure, covariates
  if (n <= d)
    throw std::invalid_argument("ols_estimate: need more rows than regression columns");

  const auto& a = frame.exposure();
  const auto& y = frame.outcome();
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    double* row = x.row(i);
    row[0] = 1.0;
    row[1] = a[static_cast<size_t>(i)];
    for (int k = 0; k < p; ++k) row[2 + k] = frame.covariate(k)[static_cast<size_t>(i)];
  }

  std::vector<double> xtx(static_cast<size_t>(d) * d, 0.0);
  std::vector<double> xty(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < n; ++i) {
    const double* row = x.row(i);
    for (int r = 0; r < d; ++r) {
      xty[static_cast<size_t>(r)] += row[r] * y[static_cast<size_t>(i)];
      for (int col = r; col < d; ++col)
        xtx[static_cast<size_t>(r) * d + col] += row[r] * row[col];
    }
  }
  for (int r = 0; r < d; ++r)
    for (int col = 0; col < r; ++col)
      xtx[static_cast<size_t>(r) * d + col] = xtx[static_cast<size_t>(col) * d + r];

  const std::vector<double> coef = solve_spd(xtx, xty, d);
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = x.row(i);
    double fit = 0.0;
    for (int r = 0; r < d; ++r) fit += coef[static_cast<size_t>(r)] * row[r];
    const double e = y[static_cast<size_t>(i)] - fit;
    rss += e * e;
  }
  const double sigma2_resid = rss / static_cast<double>(n - d);

  const double ybar = mean(y);
  const double abar = mean(a);
  const double beta_a = coef[1];
  const double shift = policy.kind() == PolicyKind::kAdditive
                           ? policy.delta()
                           : (policy.delta() - 1.0) * abar;
  const double psi = ybar + beta_a * shift;

  // psi_hat = c'Y with c = 1/n + shift * row_A of (X'X)^{-1} X'; the
  // homoskedastic variance is sigma2 * c'c.
  std::vector<double> e_a(static_cast<size_t>(d), 0.0);
  e_a[1] = 1.0;
  const std::vector<double> g = solve_spd(xtx, e_a, d);
  double ctc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = x.row(i);
    double h = 0.0;
    for (int r = 0; r < d; ++r) h += g[static_cast<size_t>(r)] * row[r];
    const double ci = 1.0 / static_cast<double>(n) + shift * h;
    ctc += ci * ci;
  }
  const double var_psi = sigma2_resid * ctc;

  EstimateResult res;
  res.method = "ols";
  res.psi = psi;
  res.has_variance = true;
  res.variance = var_psi * static_cast<double>(n);
  res.se = std::sqrt(var_psi);
  const auto ci = confidence_interval(psi, res.variance, n, alpha);
  res.ci_lo = ci.first;
  res.ci_hi = ci.second;
  res.alpha = alpha;
  res.n = n;
  res.k_max = 1;
  res.selected_m = "ols";
  res.selected_r = "none";
  return res;
}

Network NetworkSpec::build(int n, uint64_t seed) const {
  if (kind == "erdos-renyi") {
    const double p = er_p > 0.0 ? er_p : 3.0 / static_cast<double>(n);
    return generate_erdos_renyi(n, p, seed);
  }
  if (kind == "watts-strogatz") return generate_watts_strogatz(n, ws_k, ws_beta, seed);
  if (kind == "scale-free") return generate_scale_free(n, sf_lambda, seed, sf_m);
  throw std::invalid_argument("NetworkSpec: unknown kind '" + kind + "'");
}

NetworkSpec NetworkSpec::from_json(const Json& j) {
  NetworkSpec spec;
  if (j.is_string()) {
    spec.kind = j.get<std::string>();
  } else {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
      throw ConfigError("network: expected a kind string or an object with a string 'kind'");
    spec.kind = j.at("kind").get<std::string>();
    if (spec.kind == "erdos-renyi") {
      require_keys(j, {"kind", "p"}, "network");
      if (j.contains("p")) spec.er_p = require_number(j, "p", "network");
    } else if (spec.kind == "watts-strogatz") {
      require_keys(j, {"kind", "k", "beta"}, "network");
      if (j.contains("k")) spec.ws_k = static_cast<int>(require_number(j, "k", "network"));
      if (j.contains("beta")) spec.ws_beta = require_number(j, "beta", "network");
    } else if (spec.kind == "scale-free") {
      require_keys(j, {"kind", "lambda", "m"}, "network");
      if (j.contains("lambda")) spec.sf_lambda = require_number(j, "lambda", "network");
      if (j.contains("m")) spec.sf_m = static_cast<int>(require_number(j, "m", "network"));
    }
  }
  if (spec.kind != "erdos-renyi" && spec.kind != "watts-strogatz" && spec.kind != "scale-free")
    throw ConfigError("network: unknown kind '" + spec.kind + "'");
  return spec;
}

Json NetworkSpec::to_json() const {
  Json j;
  j["kind"] = kind;
  if (kind == "erdos-renyi") {
    if (er_p > 0.0) j["p"] = er_p;
  } else if (kind == "watts-strogatz") {
    j["k"] = ws_k;
    j["beta"] = ws_beta;
  } else if (kind == "scale-free") {
    j["lambda"] = sf_lambda;
    j["m"] = sf_m;
  }
  return j;
}

EstimatorSpec EstimatorSpec::from_json(const Json& j) {
  require_keys(j, {"label", "method", "m_library", "r_library", "tmle_mode"}, "estimator");
  EstimatorSpec spec;
  if (!j.contains("method") || !j.at("method").is_string())
    throw ConfigError("estimator: missing string 'method'");
  spec.method = j.at("method").get<std::string>();
  if (spec.method != "plugin" && spec.method != "one-step" && spec.method != "tmle" &&
      spec.method != "iid-tmle" && spec.method != "ols")
    throw ConfigError("estimator: unknown method '" + spec.method + "'");
  spec.label = spec.method;
  if (j.contains("label")) {
    if (!j.at("label").is_string()) throw ConfigError("estimator: 'label' must be a string");
    spec.label = j.at("label").get<std::string>();
  }
  auto read_library = [&](const char* key) {
    std::vector<LearnerSpec> lib;
    if (!j.contains(key)) return lib;
    if (!j.at(key).is_array())
      throw ConfigError(std::string("estimator: '") + key + "' must be an array");
    for (const auto& item : j.at(key)) lib.push_back(LearnerSpec::from_json(item));
    return lib;
  };
  spec.m_library = read_library("m_library");
  spec.r_library = read_library("r_library");
  if (j.contains("tmle_mode")) {
    if (!j.at("tmle_mode").is_string())
      throw ConfigError("estimator: 'tmle_mode' must be a string");
    const std::string mode = j.at("tmle_mode").get<std::string>();
    if (mode == "weighted-intercept")
      spec.tmle_mode = TmleMode::kWeightedIntercept;
    else if (mode == "covariate")
      spec.tmle_mode = TmleMode::kCovariate;
    else
      throw ConfigError("estimator: unknown tmle_mode '" + mode + "'");
  }
  return spec;
}

Json EstimatorSpec::to_json() const {
  Json j;
  j["label"] = label;
  j["method"] = method;
  j["m_library"] = Json::array();
  for (const auto& l : m_library) j["m_library"].push_back(l.to_json());
  j["r_library"] = Json::array();
  for (const auto& l : r_library) j["r_library"].push_back(l.to_json());
  j["tmle_mode"] = tmle_mode == TmleMode::kWeightedIntercept ? "weighted-intercept" : "covariate";
  return j;
}

BenchmarkConfig BenchmarkConfig::from_json(const Json& j) {
  require_keys(j,
               {"networks", "sizes", "replicates", "truth_reps", "dgp", "policy", "summary",
                "estimators", "folds", "alpha", "clip", "threads", "seed"},
               "benchmark");
  BenchmarkConfig cfg;
  if (!j.contains("networks") || !j.at("networks").is_array() || j.at("networks").empty())
    throw ConfigError("benchmark: 'networks' must be a non-empty array");
  for (const auto& item : j.at("networks")) cfg.networks.push_back(NetworkSpec::from_json(item));
  if (!j.contains("sizes") || !j.at("sizes").is_array() || j.at("sizes").empty())
    throw ConfigError("benchmark: 'sizes' must be a non-empty array");
  for (const auto& item : j.at("sizes")) {
    if (!item.is_number_integer() || item.get<int>() < 2)
      throw ConfigError("benchmark: 'sizes' must contain integers >= 2");
    cfg.sizes.push_back(item.get<int>());
  }
  if (j.contains("replicates"))
    cfg.replicates = static_cast<int>(require_number(j, "replicates", "benchmark"));
  if (j.contains("truth_reps"))
    cfg.truth_reps = static_cast<int>(require_number(j, "truth_reps", "benchmark"));
  if (cfg.replicates < 1) throw ConfigError("benchmark: 'replicates' must be >= 1");
  if (cfg.truth_reps < 1) throw ConfigError("benchmark: 'truth_reps' must be >= 1");
  if (!j.contains("dgp")) throw ConfigError("benchmark: missing 'dgp'");
  cfg.dgp = DgpSpec::from_json(j.at("dgp"));
  if (!j.contains("policy")) throw ConfigError("benchmark: missing 'policy'");
  cfg.policy = Policy::from_json(j.at("policy"));
  if (j.contains("summary")) cfg.summary = SummarySpec::from_json(j.at("summary"));
  if (!j.contains("estimators") || !j.at("estimators").is_array() || j.at("estimators").empty())
    throw ConfigError("benchmark: 'estimators' must be a non-empty array");
  for (const auto& item : j.at("estimators"))
    cfg.estimators.push_back(EstimatorSpec::from_json(item));
  if (j.contains("folds")) cfg.folds = static_cast<int>(require_number(j, "folds", "benchmark"));
  if (j.contains("alpha")) cfg.alpha = require_number(j, "alpha", "benchmark");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw ConfigError("benchmark: 'alpha' must be in (0, 1)");
  if (j.contains("clip")) {
    const auto& clip = j.at("clip");
    if (!clip.is_array() || clip.size() != 2 || !clip[0].is_number() || !clip[1].is_number())
      throw ConfigError("benchmark: 'clip' must be [lo, hi]");
    cfg.clip_lo = clip[0].get<double>();
    cfg.clip_hi = clip[1].get<double>();
  }
  if (j.contains("threads"))
    cfg.threads = static_cast<int>(require_number(j, "threads", "benchmark"));
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<int64_t>() < 0)
      throw ConfigError("benchmark: 'seed' must be a non-negative integer");
    cfg.seed = j.at("seed").get<uint64_t>();
  }
  return cfg;
}

Json BenchmarkConfig::to_json() const {
  Json j;
  j["networks"] = Json::array();
  for (const auto& net : networks) j["networks"].push_back(net.to_json());
  j["sizes"] = sizes;
  j["replicates"] = replicates;
  j["truth_reps"] = truth_reps;
  j["dgp"] = dgp.to_json();
  if (policy) j["policy"] = policy->to_json();
  j["summary"] = summary.to_json();
  j["estimators"] = Json::array();
  for (const auto& est : estimators) j["estimators"].push_back(est.to_json());
  j["folds"] = folds;
  j["alpha"] = alpha;
  j["clip"] = Json::array({clip_lo, clip_hi});
  j["threads"] = threads;
  j["seed"] = seed;
  return j;
}

Json ReplicateRecord::to_json() const {
  Json j;
  j["network"] = network;
  j["n"] = n;
  j["replicate"] = replicate;
  j["method"] = method;
  j["failed"] = failed;
  if (failed) {
    j["error"] = error;
    return j;
  }
  j["psi"] = jnum(psi);
  j["truth"] = jnum(truth);
  j["eif_residual"] = jnum(eif_residual);
  j["purity_violations"] = purity_violations;
  if (has_variance) {
    j["variance"] = jnum(variance);
    j["se"] = jnum(se);
    j["ci"] = Json::array({jnum(ci_lo), jnum(ci_hi)});
    j["covered"] = covered;
  } else {
    j["variance"] = Json();
    j["se"] = Json();
    j["ci"] = Json();
    j["covered"] = Json();
  }
  return j;
}

Json AggregateRow::to_json() const {
  Json j;
  j["network"] = network;
  j["n"] = n;
  j["method"] = method;
  j["learner"] = learner;
  j["replicates"] = replicates;
  j["failures"] = failures;
  j["truth"] = jnum(truth);
  j["truth_mc_se"] = jnum(truth_mc_se);
  j["bias_pct"] = jnum(bias_pct);
  j["scaled_bias"] = jnum(scaled_bias);
  j["mse"] = jnum(mse);
  j["scaled_mse"] = jnum(scaled_mse);
  j["variance"] = jnum(variance);
  j["mean_model_variance"] = jnum(mean_model_variance);
  j["coverage_pct"] = jnum(coverage_pct);
  j["ci_width"] = jnum(ci_width);
  return j;
}

Json BenchmarkResult::aggregates_to_json() const {
  Json j = Json::array();
  for (const auto& row : aggregates) j.push_back(row.to_json());
  return j;
}

std::string BenchmarkResult::aggregates_to_csv() const {
  std::ostringstream out;
  out << "network,n,method,learner,replicates,failures,truth,bias_pct,scaled_bias,mse,"
         "scaled_mse,variance,mean_model_variance,coverage_pct,ci_width\n";
  auto cell = [](double x) { return std::isfinite(x) ? fmt_g(x) : std::string(); };
  for (const auto& r : aggregates) {
    out << r.network << ',' << r.n << ',' << r.method << ',' << r.learner << ',' << r.replicates
        << ',' << r.failures << ',' << cell(r.truth) << ',' << cell(r.bias_pct) << ','
        << cell(r.scaled_bias) << ',' << cell(r.mse) << ',' << cell(r.scaled_mse) << ','
        << cell(r.variance) << ',' << cell(r.mean_model_variance) << ','
        << cell(r.coverage_pct) << ',' << cell(r.ci_width) << '\n';
  }
  return out.str();
}

namespace {

std::string library_label(const std::vector<LearnerSpec>& lib, bool classifier) {
  const std::vector<LearnerSpec> eff =
      lib.empty() ? (classifier ? default_classification_library() : default_regression_library())
                  : lib;
  if (eff.size() == 1) return eff.front().name();
  return "sl(" + std::to_string(eff.size()) + ")";
}

std::string estimator_learner_label(const EstimatorSpec& est) {
  if (est.method == "ols") return "ols";
  return "m=" + library_label(est.m_library, false) + ";r=" + library_label(est.r_library, true);
}

struct CellContext {
  const BenchmarkConfig* config = nullptr;
  const Network* net = nullptr;
  const DependencyStructure* dep = nullptr;
  const Network* iid_net = nullptr;
  const DependencyStructure* iid_dep = nullptr;
  SummarySpec iid_summary;
  DgpSpec dgp;
  double truth = 0.0;
};

ReplicateRecord run_replicate_method(const CellContext& ctx, const EstimatorSpec& est,
                                     const Frame& frame, uint64_t fold_seed) {
  const BenchmarkConfig& cfg = *ctx.config;
  const Policy& policy = *cfg.policy;
  EstimateResult res;
  int purity = 0;
  if (est.method == "ols") {
    res = ols_estimate(frame, policy, cfg.alpha);
  } else {
    const bool iid = est.method == "iid-tmle";
    const Network& net = iid ? *ctx.iid_net : *ctx.net;
    const DependencyStructure& dep = iid ? *ctx.iid_dep : *ctx.dep;
    const SummarySpec& spec = iid ? ctx.iid_summary : cfg.summary;
    const SummarizedFrame sf = summarize(frame, net, spec, policy);
    const int k = choose_fold_count(frame.n(), cfg.folds);
    const FoldPlan folds = make_folds(frame.n(), k, fold_seed);
    const auto& m_lib = est.m_library.empty() ? default_regression_library() : est.m_library;
    const auto& r_lib =
        est.r_library.empty() ? default_classification_library() : est.r_library;
    const NuisanceFit nf = fit_nuisances(sf, policy, m_lib, r_lib, folds, cfg.clip_lo, cfg.clip_hi);
    purity = nf.m.audit.violations() + nf.r.audit.violations();
    EstimationOptions opt;
    opt.alpha = cfg.alpha;
    opt.tmle_mode = est.tmle_mode;
    if (est.method == "plugin")
      res = plugin(sf, nf, dep, opt);
    else if (est.method == "one-step")
      res = one_step(sf, nf, dep, opt);
    else
      res = tmle(sf, nf, dep, opt);
  }
  ReplicateRecord rec;
  rec.psi = res.psi;
  rec.has_variance = res.has_variance;
  rec.eif_residual = res.eif_residual;
  rec.purity_violations = purity;
  if (res.has_variance) {
    rec.variance = res.variance;
    rec.se = res.se;
    rec.ci_lo = res.ci_lo;
    rec.ci_hi = res.ci_hi;
    rec.covered = res.ci_lo <= ctx.truth && ctx.truth <= res.ci_hi;
  }
  return rec;
}

AggregateRow aggregate_cell(const std::string& network, int n, const EstimatorSpec& est,
                            const GroundTruth& gt,
                            const std::vector<const ReplicateRecord*>& recs) {
  AggregateRow row;
  row.network = network;
  row.n = n;
  row.method = est.label;
  row.learner = estimator_learner_label(est);
  row.truth = gt.psi;
  row.truth_mc_se = gt.mc_se;
  row.replicates = static_cast<int>(recs.size());

  std::vector<double> psis, widths, model_vars;
  int covered = 0, with_ci = 0;
  for (const ReplicateRecord* r : recs) {
    if (r->failed) {
      ++row.failures;
      continue;
    }
    psis.push_back(r->psi);
    if (r->has_variance) {
      ++with_ci;
      if (r->covered) ++covered;
      widths.push_back(r->ci_hi - r->ci_lo);
      model_vars.push_back(r->variance / static_cast<double>(n));
    }
  }
  if (psis.empty()) {
    row.bias_pct = row.scaled_bias = row.mse = row.scaled_mse = kNan;
    row.variance = row.mean_model_variance = row.coverage_pct = row.ci_width = kNan;
    return row;
  }
  const double psi_bar = mean(psis);
  const double bias = psi_bar - gt.psi;
  row.bias_pct = std::fabs(gt.psi) > 1e-12 ? 100.0 * bias / std::fabs(gt.psi) : kNan;
  const double log_n = std::log(static_cast<double>(n));
  const double cn = static_cast<double>(n) / (log_n * log_n);
  row.scaled_bias = std::sqrt(cn) * std::fabs(bias);
  double mse = 0.0;
  for (double p : psis) mse += (p - gt.psi) * (p - gt.psi);
  row.mse = mse / static_cast<double>(psis.size());
  row.scaled_mse = cn * row.mse;
  row.variance = psis.size() > 1 ? sample_variance(psis) : kNan;
  row.mean_model_variance = model_vars.empty() ? kNan : mean(model_vars);
  row.coverage_pct =
      with_ci > 0 ? 100.0 * static_cast<double>(covered) / static_cast<double>(with_ci) : kNan;
  row.ci_width = widths.empty() ? kNan : mean(widths);
  return row;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
  if (!config.policy) throw std::invalid_argument("run_benchmark: config has no policy");
  if (config.networks.empty() || config.sizes.empty() || config.estimators.empty())
    throw std::invalid_argument("run_benchmark: networks, sizes, and estimators must be non-empty");
  if (config.replicates < 1) throw std::invalid_argument("run_benchmark: replicates must be >= 1");

  BenchmarkResult out;
  Rng root(config.seed);
  const int n_est = static_cast<int>(config.estimators.size());

  for (const NetworkSpec& net_spec : config.networks) {
    for (int n : config.sizes) {
      Rng cell = root.substream(net_spec.kind).substream(static_cast<uint64_t>(n));
      const uint64_t graph_seed = cell.substream("graph").next();
      const Network net = net_spec.build(n, graph_seed);
      const DependencyStructure dep(net);

      // The iid comparator sees the same data with interference assumed away:
      // an edgeless graph whose self-inclusive summary is the own exposure.
      const Network iid_net(n, {});
      const DependencyStructure iid_dep(iid_net);
      SummarySpec iid_summary = config.summary;
      iid_summary.include_self = true;

      CellContext ctx;
      ctx.config = &config;
      ctx.net = &net;
      ctx.dep = &dep;
      ctx.iid_net = &iid_net;
      ctx.iid_dep = &iid_dep;
      ctx.iid_summary = iid_summary;
      ctx.dgp = config.dgp;
      if (ctx.dgp.kind == DgpSpec::Kind::kLinearNetwork && ctx.dgp.linear.fixed_covariates)
        ctx.dgp.linear.covariate_seed = cell.substream("covariates").next();

      const uint64_t truth_seed = cell.substream("truth").next();
      GroundTruth gt;
      bool cell_ok = true;
      std::string cell_error;
      try {
        gt = ground_truth(ctx.dgp, *config.policy, config.summary, net, config.truth_reps,
                          truth_seed);
      } catch (const std::exception& e) {
        cell_ok = false;
        cell_error = e.what();
      }
      ctx.truth = gt.psi;

      const int r_count = config.replicates;
      std::vector<ReplicateRecord> cell_records(static_cast<size_t>(r_count) * n_est);
      std::vector<uint64_t> rep_seeds(static_cast<size_t>(r_count));
      for (int r = 0; r < r_count; ++r)
        rep_seeds[static_cast<size_t>(r)] =
            cell.substream("replicate").substream(static_cast<uint64_t>(r)).next();

      if (cell_ok) {
        parallel_for(r_count, config.threads, [&](int r) {
          const uint64_t rep_seed = rep_seeds[static_cast<size_t>(r)];
          Frame frame = draw_frame(ctx.dgp, net, rep_seed);
          const uint64_t fold_seed = Rng(rep_seed).substream("folds").next();
          for (int e = 0; e < n_est; ++e) {
            const EstimatorSpec& est = config.estimators[static_cast<size_t>(e)];
            ReplicateRecord rec;
            try {
              rec = run_replicate_method(ctx, est, frame, fold_seed);
            } catch (const std::exception& ex) {
              rec.failed = true;
              rec.error = ex.what();
            }
            rec.network = net_spec.kind;
            rec.n = n;
            rec.replicate = r;
            rec.method = est.label;
            rec.truth = ctx.truth;
            cell_records[static_cast<size_t>(r) * n_est + e] = std::move(rec);
          }
        });
      } else {
        for (int r = 0; r < r_count; ++r)
          for (int e = 0; e < n_est; ++e) {
            ReplicateRecord& rec = cell_records[static_cast<size_t>(r) * n_est + e];
            rec.network = net_spec.kind;
            rec.n = n;
            rec.replicate = r;
            rec.method = config.estimators[static_cast<size_t>(e)].label;
            rec.failed = true;
            rec.error = "cell ground truth failed: " + cell_error;
          }
      }

      for (int e = 0; e < n_est; ++e) {
        std::vector<const ReplicateRecord*> recs;
        recs.reserve(static_cast<size_t>(r_count));
        for (int r = 0; r < r_count; ++r)
          recs.push_back(&cell_records[static_cast<size_t>(r) * n_est + e]);
        out.aggregates.push_back(
            aggregate_cell(net_spec.kind, n, config.estimators[static_cast<size_t>(e)], gt, recs));
      }
      for (auto& rec : cell_records) out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace netshift
