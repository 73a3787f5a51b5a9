#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "netshift/learners.hpp"
#include "netshift/rng.hpp"

using namespace netshift;

namespace {

// y = 2 + 3 x0 - x1, noiseless
void linear_data(int n, Matrix& x, std::vector<double>& y, Rng& rng) {
  x = Matrix(n, 2);
  y.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    x.at(i, 0) = rng.normal();
    x.at(i, 1) = rng.normal() * 2.0;
    y[static_cast<size_t>(i)] = 2.0 + 3.0 * x.at(i, 0) - x.at(i, 1);
  }
}

double max_abs_err(const Model& m, const Matrix& x, const std::vector<double>& y) {
  double worst = 0.0;
  const auto pred = m.predict(x);
  for (size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::fabs(pred[i] - y[i]));
  return worst;
}

}  // namespace

TEST_CASE("least squares recovers an exact linear signal") {
  Rng rng(7);
  Matrix x(0, 0);
  std::vector<double> y;
  linear_data(300, x, y, rng);
  const auto m = fit_model(LearnerSpec::linear(), x, y);
  CHECK(max_abs_err(*m, x, y) < 1e-8);
}

TEST_CASE("mean-only predicts the sample mean everywhere") {
  Matrix x(4, 1);
  for (int i = 0; i < 4; ++i) x.at(i, 0) = i;
  const std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
  const auto m = fit_model(LearnerSpec::mean_only(), x, y);
  const double probe[] = {100.0};
  CHECK(m->predict_one(probe, 1) == doctest::Approx(3.0));
}

TEST_CASE("ridge interpolates between least squares and the mean") {
  Rng rng(11);
  Matrix x(0, 0);
  std::vector<double> y;
  linear_data(400, x, y, rng);

  const auto tiny = fit_model(LearnerSpec::ridge(1e-10), x, y);
  CHECK(max_abs_err(*tiny, x, y) < 1e-5);

  const auto huge = fit_model(LearnerSpec::ridge(1e12), x, y);
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(y.size());
  const double probe[] = {0.5, -0.5};
  CHECK(huge->predict_one(probe, 2) == doctest::Approx(ybar).epsilon(1e-3));
}

TEST_CASE("knn averages the nearest neighbors") {
  // 1-d grid: x = 0..9, y = x; with k=3 the interior prediction at 5 is 5.
  Matrix x(10, 1);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    x.at(i, 0) = i;
    y[static_cast<size_t>(i)] = i;
  }
  const auto m = fit_model(LearnerSpec::knn(3), x, y);
  const double probe[] = {5.0};
  CHECK(m->predict_one(probe, 1) == doctest::Approx(5.0));
  const double edge[] = {0.0};
  CHECK(m->predict_one(edge, 1) == doctest::Approx(1.0));  // mean of {0,1,2}
  // k larger than n degrades to the global mean
  const auto big = fit_model(LearnerSpec::knn(50), x, y);
  CHECK(big->predict_one(probe, 1) == doctest::Approx(4.5));
}

TEST_CASE("boosted stumps fit a step function") {
  Matrix x(200, 1);
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) {
    const double v = i / 200.0;
    x.at(i, 0) = v;
    y[static_cast<size_t>(i)] = (v > 0.5) ? 3.0 : -1.0;
  }
  const auto m = fit_model(LearnerSpec::boosted_stumps(300, 0.2, 2), x, y);
  const double lo[] = {0.25};
  const double hi[] = {0.75};
  CHECK(m->predict_one(lo, 1) == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(m->predict_one(hi, 1) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("linear logistic recovers class probabilities") {
  Rng rng(23);
  const int n = 4000;
  Matrix x(n, 1);
  std::vector<double> lab(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    x.at(i, 0) = v;
    const double p = 1.0 / (1.0 + std::exp(-(0.5 + 2.0 * v)));
    lab[static_cast<size_t>(i)] = rng.bernoulli(p) ? 1.0 : 0.0;
  }
  const auto m = fit_model(LearnerSpec::linear_logistic(), x, lab);
  for (double v : {-1.0, 0.0, 1.0}) {
    const double truth = 1.0 / (1.0 + std::exp(-(0.5 + 2.0 * v)));
    const double probe[] = {v};
    CHECK(m->predict_one(probe, 1) == doctest::Approx(truth).epsilon(0.08));
  }
}

TEST_CASE("intercept-only logistic predicts the label rate") {
  Matrix x(10, 1);
  std::vector<double> lab(10, 0.0);
  for (int i = 0; i < 3; ++i) lab[static_cast<size_t>(i)] = 1.0;
  const auto m = fit_model(LearnerSpec::intercept_logistic(), x, lab);
  const double probe[] = {42.0};
  CHECK(m->predict_one(probe, 1) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("boosted logistic separates a threshold rule") {
  Rng rng(31);
  const int n = 2000;
  Matrix x(n, 2);
  std::vector<double> lab(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    x.at(i, 0) = rng.uniform();
    x.at(i, 1) = rng.uniform();
    const double p = (x.at(i, 0) > 0.5) ? 0.9 : 0.1;
    lab[static_cast<size_t>(i)] = rng.bernoulli(p) ? 1.0 : 0.0;
  }
  const auto m = fit_model(LearnerSpec::boosted_logistic(150, 0.2, 2), x, lab);
  const double lo[] = {0.2, 0.5};
  const double hi[] = {0.8, 0.5};
  CHECK(m->predict_one(lo, 2) == doctest::Approx(0.1).epsilon(0.6));
  CHECK(m->predict_one(hi, 2) == doctest::Approx(0.9).epsilon(0.15));
  CHECK(m->predict_one(lo, 2) < 0.3);
  CHECK(m->predict_one(hi, 2) > 0.7);
}

TEST_CASE("constant outcomes never break a fit") {
  Matrix x(20, 2);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    x.at(i, 0) = rng.normal();
    x.at(i, 1) = rng.normal();
  }
  const std::vector<double> y(20, 7.0);
  for (const auto& spec :
       {LearnerSpec::mean_only(), LearnerSpec::linear(), LearnerSpec::ridge(0.5),
        LearnerSpec::knn(5), LearnerSpec::boosted_stumps(50, 0.1, 2)}) {
    const auto m = fit_model(spec, x, y);
    const double probe[] = {0.0, 0.0};
    CHECK(m->predict_one(probe, 2) == doctest::Approx(7.0).epsilon(1e-9));
  }
  const std::vector<double> ones(20, 1.0);
  for (const auto& spec : {LearnerSpec::intercept_logistic(), LearnerSpec::linear_logistic(),
                           LearnerSpec::boosted_logistic(50, 0.1, 2)}) {
    const auto m = fit_model(spec, x, ones);
    const double probe[] = {0.0, 0.0};
    CHECK(m->predict_one(probe, 2) > 0.95);
  }
}

TEST_CASE("degenerate designs degrade instead of throwing") {
  Matrix x(30, 2);
  std::vector<double> y(30);
  for (int i = 0; i < 30; ++i) {
    x.at(i, 0) = 1.0;  // constant column
    x.at(i, 1) = 2.0;  // collinear with it
    y[static_cast<size_t>(i)] = (i % 2 == 0) ? 1.0 : 3.0;
  }
  for (const auto& spec : {LearnerSpec::linear(), LearnerSpec::ridge(1.0),
                           LearnerSpec::boosted_stumps(20, 0.1, 2)}) {
    const auto m = fit_model(spec, x, y);
    const double probe[] = {1.0, 2.0};
    CHECK(std::isfinite(m->predict_one(probe, 2)));
    CHECK(m->predict_one(probe, 2) == doctest::Approx(2.0).epsilon(0.01));
  }
}

TEST_CASE("fits are deterministic") {
  Rng rng(99);
  Matrix x(0, 0);
  std::vector<double> y;
  linear_data(150, x, y, rng);
  for (double& v : y) v += 0.3 * std::sin(v);
  const auto a = fit_model(LearnerSpec::boosted_stumps(100, 0.1, 3), x, y);
  const auto b = fit_model(LearnerSpec::boosted_stumps(100, 0.1, 3), x, y);
  CHECK(a->predict(x) == b->predict(x));
}

TEST_CASE("learner specs round trip through json and reject unknown keys") {
  for (const auto& spec :
       {LearnerSpec::mean_only(), LearnerSpec::linear(), LearnerSpec::ridge(0.25),
        LearnerSpec::knn(7), LearnerSpec::boosted_stumps(77, 0.05, 4),
        LearnerSpec::intercept_logistic(), LearnerSpec::linear_logistic(),
        LearnerSpec::boosted_logistic(33, 0.2, 2)}) {
    const LearnerSpec back = LearnerSpec::from_json(spec.to_json());
    CHECK(back.kind == spec.kind);
    CHECK(back.name() == spec.name());
    CHECK(back.to_json() == spec.to_json());
  }
  CHECK(LearnerSpec::ridge(0.25).name() == "ridge(0.25)");
  CHECK_THROWS_AS(LearnerSpec::from_json(Json{{"kind", "linear"}}), ConfigError);
  CHECK_THROWS_AS(LearnerSpec::from_json(Json{{"kind", "ridge"}, {"bogus", 1.0}}), ConfigError);
  CHECK(LearnerSpec::from_json(Json{{"kind", "ridge"}, {"lambda", 0.5}}).ridge_lambda == 0.5);
  CHECK_THROWS_AS(
      LearnerSpec::from_json(Json{{"kind", "k-nearest-neighbors"}, {"knn_k", 0}}),
      ConfigError);
  CHECK(LearnerSpec::from_json(Json{{"kind", "linear-least-squares"}}).kind ==
        LearnerKind::kLinearLeastSquares);
  CHECK(LearnerSpec::linear_logistic().is_classifier());
  CHECK_FALSE(LearnerSpec::linear().is_classifier());
}

TEST_CASE("design and response sizes must agree") {
  Matrix x(4, 1);
  std::vector<double> short_y = {0.0, 1.0};
  CHECK_THROWS_AS(fit_model(LearnerSpec::linear(), x, short_y), std::invalid_argument);
  CHECK_THROWS_AS(fit_model(LearnerSpec::linear(), Matrix(0, 1), {}), std::invalid_argument);
}
