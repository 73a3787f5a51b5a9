// Small numeric utilities: moments, the normal distribution, and the dense
// SPD solves backing the linear learners.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace netshift {

double mean(const std::vector<double>& x);
// Unbiased sample variance; 0 for fewer than 2 elements.
double sample_variance(const std::vector<double>& x);

double normal_cdf(double x);
// Inverse standard normal CDF (Wichura's AS 241, double precision).
// Throws std::invalid_argument outside (0, 1).
double normal_quantile(double p);

// Row-major dense matrix, sized once and filled by the caller.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  double* row(int i) { return v.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return v.data() + static_cast<std::size_t>(i) * cols; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

// Solves A x = b for symmetric positive (semi-)definite A of order p, with
// escalating diagonal jitter when the factorization stalls. A is row-major
// p*p and is overwritten. Always returns a finite solution.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, int p);

// Least squares of y on [1, X] (intercept prepended); ridge >= 0 penalizes the
// non-intercept coefficients. Returns p+1 coefficients.
std::vector<double> ols_coefficients(const Matrix& x, const std::vector<double>& y,
                                     double ridge = 0.0);

// Logistic regression of y in {0,1} on [1, X] by damped IRLS with a small
// ridge for stability. Deterministic; caps iterations rather than throwing.
std::vector<double> logistic_coefficients(const Matrix& x, const std::vector<double>& y);

inline double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace netshift
