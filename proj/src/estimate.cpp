#include "netshift/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "netshift/stats.hpp"

namespace netshift {

EifComponents center_components(std::vector<double> phi, const std::vector<int>& degree,
                                int degree_bin) {
  if (phi.size() != degree.size())
    throw std::invalid_argument("center_components: phi and degree lengths disagree");
  if (degree_bin < 1) throw std::invalid_argument("center_components: degree_bin must be >= 1");
  const std::size_t n = phi.size();

  EifComponents eif;
  double total = 0.0;
  for (double v : phi) total += v;
  eif.global_mean = n > 0 ? total / static_cast<double>(n) : 0.0;

  std::map<int, std::pair<double, int>> sums;  // stratum key -> (sum, count)
  auto key = [&](std::size_t i) { return degree[i] / degree_bin; };
  for (std::size_t i = 0; i < n; ++i) {
    auto& [s, c] = sums[key(i)];
    s += phi[i];
    ++c;
  }
  for (const auto& [k, sc] : sums)
    eif.strata_means[k] = sc.second >= 2 ? sc.first / sc.second : eif.global_mean;

  eif.centered.resize(n);
  for (std::size_t i = 0; i < n; ++i) eif.centered[i] = phi[i] - eif.strata_means.at(key(i));
  eif.phi = std::move(phi);
  return eif;
}

EifComponents eif_components(const NuisanceFit& nf, const std::vector<double>& y,
                             const std::vector<int>& degree, int degree_bin) {
  const std::size_t n = y.size();
  if (nf.m.m_natural.size() != n || nf.m.m_shifted.size() != n || nf.r.rho.size() != n)
    throw std::invalid_argument("eif_components: nuisance fit does not match outcome length");
  std::vector<double> phi(n);
  for (std::size_t i = 0; i < n; ++i)
    phi[i] = nf.r.rho[i] * (y[i] - nf.m.m_natural[i]) + nf.m.m_shifted[i];
  return center_components(std::move(phi), degree, degree_bin);
}

VarianceResult dependency_variance(const EifComponents& eif, const DependencyStructure& dep) {
  const int n = dep.size();
  if (static_cast<std::size_t>(n) != eif.centered.size())
    throw std::invalid_argument("dependency_variance: dependency structure does not match EIF length");
  double full = 0.0, diag = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ci = eif.centered[static_cast<std::size_t>(i)];
    double row = 0.0;
    for (int j : dep.unit(i)) row += eif.centered[static_cast<std::size_t>(j)];
    full += ci * row;
    diag += ci * ci;
  }
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  full /= n2;
  diag /= n2;
  VarianceResult out;
  if (full <= 0.0 && diag > 0.0) {
    out.value = diag;
    out.floored = true;
  } else {
    out.value = std::max(full, 0.0);
  }
  return out;
}

std::pair<double, double> confidence_interval(double psi, double sigma2, int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("confidence_interval: alpha must lie in (0, 1)");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("confidence_interval: variance must be >= 0");
  if (n < 1) throw std::invalid_argument("confidence_interval: n must be >= 1");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(sigma2 / static_cast<double>(n));
  return {psi - half, psi + half};
}

namespace {

void validate_inputs(const SummarizedFrame& sf, const NuisanceFit& nf,
                     const DependencyStructure& dep) {
  if (!sf.has_y) throw std::invalid_argument("estimate: frame has no outcome");
  if (dep.size() != sf.n)
    throw std::invalid_argument("estimate: dependency structure does not match frame");
  if (static_cast<int>(nf.m.m_natural.size()) != sf.n)
    throw std::invalid_argument("estimate: nuisance fit does not match frame");
}

EstimateResult base_result(const char* method, const SummarizedFrame& sf, const NuisanceFit& nf,
                           const DependencyStructure& dep, const EstimationOptions& opt) {
  EstimateResult res;
  res.method = method;
  res.alpha = opt.alpha;
  res.n = sf.n;
  (void)dep;
  res.k_max = 0;
  for (int d : sf.degree) res.k_max = std::max(res.k_max, d);
  res.clip_count = nf.r.clip_count;
  res.positivity = check_positivity(sf, opt.positivity_tolerance);
  res.selected_m = nf.m.selected_name;
  res.selected_r = nf.r.selected_name;
  return res;
}

void attach_variance(EstimateResult& res, const EifComponents& eif, const DependencyStructure& dep,
                     const EstimationOptions& opt) {
  const VarianceResult v = dependency_variance(eif, dep);
  res.has_variance = true;
  res.variance = v.value * static_cast<double>(res.n);  // n-scaled reporting convention
  res.se = std::sqrt(v.value);
  res.variance_floored = v.floored;
  const auto ci = confidence_interval(res.psi, res.variance, res.n, opt.alpha);
  res.ci_lo = ci.first;
  res.ci_hi = ci.second;
}

}  // namespace

EstimateResult plugin(const SummarizedFrame& sf, const NuisanceFit& nf,
                      const DependencyStructure& dep, const EstimationOptions& opt) {
  validate_inputs(sf, nf, dep);
  EstimateResult res = base_result("plugin", sf, nf, dep, opt);
  res.psi = mean(nf.m.m_shifted);
  // No dependable variance theory for the uncorrected plug-in; report the
  // would-be one-step correction as a diagnostic instead.
  EifComponents eif = eif_components(nf, sf.y, sf.degree, opt.degree_bin);
  res.eif_residual = std::abs(mean(eif.phi) - res.psi);
  return res;
}

EstimateResult one_step(const SummarizedFrame& sf, const NuisanceFit& nf,
                        const DependencyStructure& dep, const EstimationOptions& opt) {
  validate_inputs(sf, nf, dep);
  EstimateResult res = base_result("one-step", sf, nf, dep, opt);
  EifComponents eif = eif_components(nf, sf.y, sf.degree, opt.degree_bin);
  for (std::size_t i = 0; i < eif.phi.size(); ++i)
    if (!std::isfinite(eif.phi[i]))
      throw std::runtime_error("one_step: non-finite EIF value at unit " + std::to_string(i));
  res.psi = mean(eif.phi);
  res.eif_residual = 0.0;  // psi is defined as mean(phi)
  attach_variance(res, eif, dep, opt);
  return res;
}

EstimateResult tmle(const SummarizedFrame& sf, const NuisanceFit& nf,
                    const DependencyStructure& dep, const EstimationOptions& opt) {
  validate_inputs(sf, nf, dep);
  EstimateResult res = base_result("tmle", sf, nf, dep, opt);
  const std::size_t un = static_cast<std::size_t>(sf.n);

  const double y_min = *std::min_element(sf.y.begin(), sf.y.end());
  const double y_max = *std::max_element(sf.y.begin(), sf.y.end());
  if (y_max == y_min) {
    // Degenerate outcome: the substitution estimate is that constant and no
    // fluctuation is needed.
    res.psi = y_min;
    res.epsilon = 0.0;
    std::vector<double> phi(un, y_min);
    EifComponents eif = center_components(std::move(phi), sf.degree, opt.degree_bin);
    attach_variance(res, eif, dep, opt);
    res.eif_residual = 0.0;
    return res;
  }

  const double margin = 0.005 * (y_max - y_min);
  const double lo = y_min - margin;
  const double range = (y_max + margin) - lo;

  // Rescale to the open unit interval and move m_hat to the logit scale.
  constexpr double kEdge = 1e-9;
  auto to_unit = [&](double v) {
    return std::min(1.0 - kEdge, std::max(kEdge, (v - lo) / range));
  };
  std::vector<double> y_til(un), off_nat(un), off_shift(un);
  for (std::size_t i = 0; i < un; ++i) {
    y_til[i] = (sf.y[i] - lo) / range;
    const double mn = to_unit(nf.m.m_natural[i]);
    const double ms = to_unit(nf.m.m_shifted[i]);
    off_nat[i] = std::log(mn / (1.0 - mn));
    off_shift[i] = std::log(ms / (1.0 - ms));
  }

  // Fluctuation: logistic MLE in epsilon. Weighted-intercept mode puts rho in
  // the weights; covariate mode puts it in the regressor (evaluated at the
  // shifted features for the update).
  const bool covariate_mode = opt.tmle_mode == TmleMode::kCovariate;
  auto weight = [&](std::size_t i) { return covariate_mode ? 1.0 : nf.r.rho[i]; };
  auto cov_nat = [&](std::size_t i) { return covariate_mode ? nf.r.rho[i] : 1.0; };
  auto cov_shift = [&](std::size_t i) { return covariate_mode ? nf.r.rho_shifted[i] : 1.0; };

  auto score_at = [&](double eps) {
    double s = 0.0;
    for (std::size_t i = 0; i < un; ++i)
      s += weight(i) * cov_nat(i) * (y_til[i] - sigmoid(off_nat[i] + eps * cov_nat(i)));
    return s;
  };

  double eps = 0.0;
  double score = score_at(eps);
  const double tol = opt.tmle_score_tolerance * static_cast<double>(sf.n);
  int it = 0;
  while (std::abs(score) > tol) {
    if (it >= opt.tmle_max_iterations)
      throw std::runtime_error(
          "tmle: fluctuation failed to converge after " + std::to_string(it) +
          " iterations (|score|/n = " + std::to_string(std::abs(score) / sf.n) + ")");
    double info = 0.0;
    for (std::size_t i = 0; i < un; ++i) {
      const double p = sigmoid(off_nat[i] + eps * cov_nat(i));
      info += weight(i) * cov_nat(i) * cov_nat(i) * p * (1.0 - p);
    }
    if (!(info > 1e-300))
      throw std::runtime_error("tmle: fluctuation information degenerated to zero");
    double step = score / info;
    // Damping: halve the step until the score magnitude stops growing.
    double eps_new = eps + step;
    double score_new = score_at(eps_new);
    int halvings = 0;
    while (std::abs(score_new) > std::abs(score) && halvings < 60) {
      step *= 0.5;
      eps_new = eps + step;
      score_new = score_at(eps_new);
      ++halvings;
    }
    eps = eps_new;
    score = score_new;
    ++it;
  }
  res.epsilon = eps;
  res.tmle_iterations = it;

  std::vector<double> m_star_shift(un), phi(un);
  double psi_raw = 0.0;
  for (std::size_t i = 0; i < un; ++i) {
    m_star_shift[i] = lo + range * sigmoid(off_shift[i] + eps * cov_shift(i));
    psi_raw += m_star_shift[i];
  }
  psi_raw /= static_cast<double>(sf.n);
  res.psi = std::min(y_max, std::max(y_min, psi_raw));

  for (std::size_t i = 0; i < un; ++i) {
    const double m_star_nat = lo + range * sigmoid(off_nat[i] + eps * cov_nat(i));
    phi[i] = nf.r.rho[i] * (sf.y[i] - m_star_nat) + m_star_shift[i];
  }
  res.eif_residual = std::abs(mean(phi) - res.psi);
  EifComponents eif = center_components(std::move(phi), sf.degree, opt.degree_bin);
  attach_variance(res, eif, dep, opt);
  return res;
}

Json EstimateResult::to_json() const {
  Json j;
  j["method"] = method;
  j["psi"] = psi;
  j["variance"] = has_variance ? Json(variance) : Json(nullptr);
  j["se"] = has_variance ? Json(se) : Json(nullptr);
  j["ci"] = has_variance ? Json::array({ci_lo, ci_hi}) : Json(nullptr);
  j["alpha"] = alpha;
  j["n"] = n;
  j["k_max"] = k_max;
  Json flags = Json::array();
  for (const auto& s : positivity.strata)
    if (s.flagged) flags.push_back(s.degree);
  Json d;
  d["eif_residual"] = eif_residual;
  d["clip_count"] = clip_count;
  d["variance_floored"] = variance_floored;
  d["positivity_flags"] = flags;
  d["positivity"] = positivity.to_json();
  d["epsilon"] = epsilon;
  d["tmle_iterations"] = tmle_iterations;
  d["selected_m"] = selected_m;
  d["selected_r"] = selected_r;
  j["diagnostics"] = d;
  return j;
}

}  // namespace netshift
