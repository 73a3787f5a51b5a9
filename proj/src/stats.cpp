#include "netshift/stats.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace netshift {

double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (const double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (const double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(n - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// AS 241 algorithm PPND16: relative accuracy about 1e-15 over (0, 1).
double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, int p) {
  if (p <= 0) return {};
  double diag_scale = 0.0;
  for (int i = 0; i < p; ++i) diag_scale += a[static_cast<std::size_t>(i) * p + i];
  diag_scale = diag_scale > 0.0 ? diag_scale / p : 1.0;

  std::vector<double> chol;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    chol = a;
    if (jitter > 0.0)
      for (int i = 0; i < p; ++i) chol[static_cast<std::size_t>(i) * p + i] += jitter;
    bool ok = true;
    for (int i = 0; i < p && ok; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = chol[static_cast<std::size_t>(i) * p + j];
        for (int k = 0; k < j; ++k)
          s -= chol[static_cast<std::size_t>(i) * p + k] * chol[static_cast<std::size_t>(j) * p + k];
        if (i == j) {
          if (!(s > diag_scale * 1e-14)) {
            ok = false;
            break;
          }
          chol[static_cast<std::size_t>(i) * p + i] = std::sqrt(s);
        } else {
          chol[static_cast<std::size_t>(i) * p + j] =
              s / chol[static_cast<std::size_t>(j) * p + j];
        }
      }
    }
    if (ok) {
      // forward then back substitution on the lower factor
      std::vector<double> x = b;
      for (int i = 0; i < p; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= chol[static_cast<std::size_t>(i) * p + k] * x[k];
        x[i] = s / chol[static_cast<std::size_t>(i) * p + i];
      }
      for (int i = p - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < p; ++k) s -= chol[static_cast<std::size_t>(k) * p + i] * x[k];
        x[i] = s / chol[static_cast<std::size_t>(i) * p + i];
      }
      bool finite = true;
      for (const double v : x)
        if (!std::isfinite(v)) finite = false;
      if (finite) return x;
    }
    jitter = jitter == 0.0 ? diag_scale * 1e-10 : jitter * 100.0;
  }
  return std::vector<double>(static_cast<std::size_t>(p), 0.0);
}

namespace {

// Gram matrix and moment vector for y on [1, X].
void build_normal_equations(const Matrix& x, const std::vector<double>& y,
                            std::vector<double>& xtx, std::vector<double>& xty) {
  const int p = x.cols + 1;
  xtx.assign(static_cast<std::size_t>(p) * p, 0.0);
  xty.assign(static_cast<std::size_t>(p), 0.0);
  for (int i = 0; i < x.rows; ++i) {
    const double* r = x.row(i);
    xtx[0] += 1.0;
    xty[0] += y[i];
    for (int j = 0; j < x.cols; ++j) {
      xtx[static_cast<std::size_t>(j + 1)] += r[j];
      xty[static_cast<std::size_t>(j + 1)] += r[j] * y[i];
      for (int k = 0; k <= j; ++k)
        xtx[static_cast<std::size_t>(j + 1) * p + (k + 1)] += r[j] * r[k];
    }
  }
  // mirror lower triangle and the first column
  for (int j = 1; j < p; ++j) xtx[static_cast<std::size_t>(j) * p] = xtx[static_cast<std::size_t>(j)];
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < j; ++k)
      xtx[static_cast<std::size_t>(k) * p + j] = xtx[static_cast<std::size_t>(j) * p + k];
}

}  // namespace

std::vector<double> ols_coefficients(const Matrix& x, const std::vector<double>& y,
                                     double ridge) {
  std::vector<double> xtx, xty;
  build_normal_equations(x, y, xtx, xty);
  const int p = x.cols + 1;
  if (ridge > 0.0)
    for (int j = 1; j < p; ++j) xtx[static_cast<std::size_t>(j) * p + j] += ridge;
  return solve_spd(std::move(xtx), std::move(xty), p);
}

std::vector<double> logistic_coefficients(const Matrix& x, const std::vector<double>& y) {
  const int p = x.cols + 1;
  const int n = x.rows;
  std::vector<double> beta(static_cast<std::size_t>(p), 0.0);
  std::vector<double> eta(static_cast<std::size_t>(n), 0.0);

  const auto log_likelihood = [&](const std::vector<double>& e) {
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      // log(p) / log(1-p) written to avoid overflow at extreme eta
      const double t = e[i];
      const double log1pexp = t > 30.0 ? t : std::log1p(std::exp(t));
      ll += y[i] * t - log1pexp;
    }
    return ll;
  };
  const auto compute_eta = [&](const std::vector<double>& b, std::vector<double>& e) {
    for (int i = 0; i < n; ++i) {
      const double* r = x.row(i);
      double t = b[0];
      for (int j = 0; j < x.cols; ++j) t += b[static_cast<std::size_t>(j + 1)] * r[j];
      e[i] = t;
    }
  };

  double ll = log_likelihood(eta);
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<double> grad(static_cast<std::size_t>(p), 0.0);
    std::vector<double> hess(static_cast<std::size_t>(p) * p, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* r = x.row(i);
      const double mu = sigmoid(eta[i]);
      const double w = std::max(mu * (1.0 - mu), 1e-10);
      const double res = y[i] - mu;
      grad[0] += res;
      hess[0] += w;
      for (int j = 0; j < x.cols; ++j) {
        grad[static_cast<std::size_t>(j + 1)] += res * r[j];
        hess[static_cast<std::size_t>(j + 1)] += w * r[j];
        for (int k = 0; k <= j; ++k)
          hess[static_cast<std::size_t>(j + 1) * p + (k + 1)] += w * r[j] * r[k];
      }
    }
    for (int j = 1; j < p; ++j) hess[static_cast<std::size_t>(j) * p] = hess[static_cast<std::size_t>(j)];
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < j; ++k)
        hess[static_cast<std::size_t>(k) * p + j] = hess[static_cast<std::size_t>(j) * p + k];
    for (int j = 0; j < p; ++j) hess[static_cast<std::size_t>(j) * p + j] += 1e-8;

    double gmax = 0.0;
    for (const double g : grad) gmax = std::max(gmax, std::fabs(g));
    if (gmax < 1e-10 * std::max(1, n)) break;

    const std::vector<double> step = solve_spd(std::move(hess), grad, p);
    double scale = 1.0;
    std::vector<double> candidate(static_cast<std::size_t>(p));
    std::vector<double> eta_new(static_cast<std::size_t>(n));
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      for (int j = 0; j < p; ++j) candidate[j] = beta[j] + scale * step[j];
      compute_eta(candidate, eta_new);
      const double ll_new = log_likelihood(eta_new);
      if (ll_new >= ll - 1e-12) {
        beta = candidate;
        eta = eta_new;
        improved = ll_new > ll + 1e-12;
        ll = ll_new;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
  }
  return beta;
}

}  // namespace netshift
