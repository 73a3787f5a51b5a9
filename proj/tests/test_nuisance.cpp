#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "netshift/network.hpp"
#include "netshift/nuisance.hpp"
#include "netshift/rng.hpp"
#include "netshift/summary.hpp"

using namespace netshift;

namespace {

// n-cycle: every node has degree 2.
Network cycle(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return Network(n, edges);
}

// Exposure standard normal, one covariate, outcome y = f(a_s) + noise_sd * z.
SummarizedFrame make_sf(const Network& net, const Policy& policy, uint64_t seed,
                        double (*f)(double), double noise_sd) {
  Rng rng(seed);
  const int n = net.size();
  std::vector<double> a(static_cast<size_t>(n)), l(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    a[static_cast<size_t>(i)] = rng.normal();
    l[static_cast<size_t>(i)] = rng.uniform();
  }
  Frame base({"L1"}, {l}, a, std::nullopt);
  SummarizedFrame sf = summarize(base, net, SummarySpec{}, policy);
  sf.has_y = true;
  sf.y.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    sf.y[static_cast<size_t>(i)] = f(sf.a_s[static_cast<size_t>(i)]) + noise_sd * rng.normal();
  return sf;
}

double linear_f(double a_s) { return 2.0 * a_s + 1.0; }

}  // namespace

TEST_CASE("folds are balanced, exhaustive, and deterministic") {
  const FoldPlan even = make_folds(10, 5, 7);
  std::vector<int> counts(5, 0);
  for (int f : even.assignment) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++counts[static_cast<size_t>(f)];
  }
  CHECK(counts == std::vector<int>(5, 2));

  const FoldPlan odd = make_folds(11, 5, 7);
  counts.assign(5, 0);
  for (int f : odd.assignment) ++counts[static_cast<size_t>(f)];
  std::sort(counts.begin(), counts.end());
  CHECK(counts == std::vector<int>{2, 2, 2, 2, 3});

  CHECK(make_folds(100, 4, 9).assignment == make_folds(100, 4, 9).assignment);
  CHECK(make_folds(100, 4, 9).assignment != make_folds(100, 4, 10).assignment);

  CHECK_THROWS_AS(make_folds(10, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(3, 4, 0), std::invalid_argument);
}

TEST_CASE("fold count shrinks when complements would be too small") {
  CHECK(choose_fold_count(24, 5) == 2);   // 24 * 4/5 < 20
  CHECK(choose_fold_count(25, 5) == 5);   // exactly 20 per complement
  CHECK(choose_fold_count(1000, 5) == 5);
  CHECK(choose_fold_count(30, 10) == 10);  // complement 27 >= 20, no shrink
  CHECK(choose_fold_count(21, 10) == 2);   // complement 18 < 20
  CHECK(choose_fold_count(4, 2) == 2);    // floor: never below 2
}

TEST_CASE("cross-validation picks the learner that matches the signal") {
  const Network net = cycle(400);
  const SummarizedFrame sf = make_sf(net, Policy::additive(0.5), 3, linear_f, 0.1);
  const FoldPlan folds = make_folds(400, 5, 11);
  const std::vector<LearnerSpec> lib = {LearnerSpec::mean_only(), LearnerSpec::linear()};
  const ConditionalMeanFit fit = fit_conditional_mean(sf, lib, folds);
  CHECK(fit.selected == 1);
  CHECK(fit.selected_name == "linear-least-squares");
  REQUIRE(fit.cv_risk.size() == 2);
  CHECK(fit.cv_risk[1] < fit.cv_risk[0]);
  CHECK(fit.cv_risk[1] == doctest::Approx(0.01).epsilon(0.5));  // ~ noise variance
}

TEST_CASE("linear fits shift predictions by the fitted slope times delta degree") {
  const double delta = 0.7;
  const Network net = cycle(300);
  const SummarizedFrame sf = make_sf(net, Policy::additive(delta), 5, linear_f, 0.0);
  const FoldPlan folds = make_folds(300, 3, 2);
  const ConditionalMeanFit fit =
      fit_conditional_mean(sf, {LearnerSpec::linear()}, folds);
  // noiseless linear outcome: every fold recovers slope 2 exactly, so the
  // natural and shifted predictions differ by 2 * delta * degree
  for (int i = 0; i < 300; ++i) {
    const size_t u = static_cast<size_t>(i);
    CHECK(fit.m_shifted[u] - fit.m_natural[u] == doctest::Approx(2.0 * delta * 2.0).epsilon(1e-6));
    CHECK(fit.m_natural[u] == doctest::Approx(linear_f(sf.a_s[u])).epsilon(1e-6));
  }
}

TEST_CASE("constant outcomes give constant fits under every candidate") {
  const Network net = cycle(100);
  SummarizedFrame sf = make_sf(net, Policy::additive(0.5), 9, linear_f, 0.0);
  std::fill(sf.y.begin(), sf.y.end(), 4.0);
  const FoldPlan folds = make_folds(100, 2, 3);
  const ConditionalMeanFit fit = fit_conditional_mean(sf, default_regression_library(), folds);
  for (double v : fit.m_natural) CHECK(v == doctest::Approx(4.0).epsilon(1e-9));
  for (double v : fit.m_shifted) CHECK(v == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("cross-fit purity holds: no unit is scored by a model that saw it") {
  const Network net = generate_erdos_renyi(200, 0.03, 4);
  const SummarizedFrame sf = make_sf(net, Policy::additive(0.4), 13, linear_f, 0.3);
  const FoldPlan folds = make_folds(200, 4, 17);
  const NuisanceFit nf = fit_nuisances(sf, Policy::additive(0.4),
                                       {LearnerSpec::linear(), LearnerSpec::mean_only()},
                                       {LearnerSpec::linear_logistic()}, folds);
  CHECK(nf.m.audit.violations() == 0);
  CHECK(nf.r.audit.violations() == 0);
  REQUIRE(nf.m.audit.fold_training_rows.size() == 4);
  // manual audit: unit's producing fold never trained on the unit's row
  for (int i = 0; i < 200; ++i) {
    const int f = nf.m.audit.producing_fold[static_cast<size_t>(i)];
    REQUIRE(f >= 0);
    const auto& rows = nf.m.audit.fold_training_rows[static_cast<size_t>(f)];
    CHECK(std::find(rows.begin(), rows.end(), i) == rows.end());
  }
  // training rows are exactly the fold complement
  for (int f = 0; f < 4; ++f) {
    size_t out_of_fold = 0;
    for (int g : folds.assignment)
      if (g != f) ++out_of_fold;
    CHECK(nf.m.audit.fold_training_rows[static_cast<size_t>(f)].size() == out_of_fold);
  }
}

TEST_CASE("density ratio recovers the Gaussian closed form on a regular graph") {
  // Cycle: a_s ~ N(0, 2) for every unit. Additive delta shifts the summary law
  // to N(2 delta, 2), so the true odds at x are
  //   exp(delta * x - delta^2 * deg / 2)  with deg = 2.
  const double delta = 0.5;
  const int n = 4000;
  const Network net = cycle(n);
  const SummarizedFrame sf = make_sf(net, Policy::additive(delta), 21, linear_f, 0.5);
  const FoldPlan folds = make_folds(n, 5, 23);
  const DensityRatioFit fit =
      fit_density_ratio(sf, Policy::additive(delta), {LearnerSpec::linear_logistic()}, folds);
  CHECK(fit.selected == 0);

  // compare on the central 80% of natural summaries
  std::vector<double> sorted = sf.a_s;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[static_cast<size_t>(0.10 * n)];
  const double hi = sorted[static_cast<size_t>(0.90 * n)];
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sf.a_s[static_cast<size_t>(i)];
    if (x < lo || x > hi) continue;
    const double truth = std::exp(delta * x - delta * delta * 2.0 / 2.0);
    const double rel = std::fabs(fit.rho[static_cast<size_t>(i)] - truth) / truth;
    worst = std::max(worst, rel);
  }
  CHECK(worst < 0.20);
}

TEST_CASE("identity policies short-circuit the ratio to one") {
  const Network net = cycle(50);
  const SummarizedFrame sf = make_sf(net, Policy::additive(0.0), 31, linear_f, 0.1);
  const FoldPlan folds = make_folds(50, 2, 5);
  for (const Policy& p : {Policy::additive(0.0), Policy::multiplicative(1.0)}) {
    const DensityRatioFit fit =
        fit_density_ratio(sf, p, {LearnerSpec::linear_logistic()}, folds);
    CHECK(fit.selected == -1);
    CHECK(fit.selected_name == "identity");
    CHECK(fit.clip_count == 0);
    for (double v : fit.rho) CHECK(v == 1.0);
    for (double v : fit.rho_shifted) CHECK(v == 1.0);
  }
}

TEST_CASE("odds are clipped into the configured band and counted") {
  const Network net = cycle(500);
  const SummarizedFrame sf = make_sf(net, Policy::additive(3.0), 37, linear_f, 0.5);
  const FoldPlan folds = make_folds(500, 5, 7);
  const DensityRatioFit fit = fit_density_ratio(sf, Policy::additive(3.0),
                                                {LearnerSpec::linear_logistic()}, folds,
                                                0.8, 1.25);
  CHECK(fit.clip_lo == 0.8);
  CHECK(fit.clip_hi == 1.25);
  CHECK(fit.clip_count > 0);
  for (double v : fit.rho) {
    CHECK(v >= 0.8);
    CHECK(v <= 1.25);
  }
  for (double v : fit.rho_shifted) {
    CHECK(v >= 0.8);
    CHECK(v <= 1.25);
  }

  // default band keeps everything finite and positive
  const DensityRatioFit wide =
      fit_density_ratio(sf, Policy::additive(3.0), {LearnerSpec::linear_logistic()}, folds);
  for (double v : wide.rho) {
    CHECK(v >= 1e-3);
    CHECK(v <= 1e3);
  }
}

TEST_CASE("empty libraries and misaligned folds are rejected") {
  const Network net = cycle(60);
  const SummarizedFrame sf = make_sf(net, Policy::additive(0.5), 41, linear_f, 0.1);
  const FoldPlan folds = make_folds(60, 2, 3);
  CHECK_THROWS_AS(fit_conditional_mean(sf, {}, folds), std::invalid_argument);
  CHECK_THROWS_AS(
      fit_density_ratio(sf, Policy::additive(0.5), {}, folds),
      std::invalid_argument);
  const FoldPlan wrong = make_folds(59, 2, 3);
  CHECK_THROWS_AS(fit_conditional_mean(sf, {LearnerSpec::linear()}, wrong),
                  std::invalid_argument);
}

TEST_CASE("feature design is the summary, the columns, then degree") {
  const Network net(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  Frame base({"L1"}, {{7.0, 8.0, 9.0}}, {1.0, 2.0, 3.0}, std::nullopt);
  const SummarizedFrame sf = summarize(base, net, SummarySpec{}, Policy::additive(0.0));
  const Matrix x = nuisance_features(sf, sf.a_s);
  REQUIRE(x.rows == 3);
  REQUIRE(x.cols == 4);  // a_s | L1 | L1_s | degree
  CHECK(x.at(0, 0) == 2.0);
  CHECK(x.at(0, 1) == 7.0);
  CHECK(x.at(0, 2) == 8.0);
  CHECK(x.at(0, 3) == 1.0);
  CHECK(x.at(1, 3) == 2.0);
}

TEST_CASE("nuisance fits are deterministic given the fold plan") {
  const Network net = cycle(200);
  const SummarizedFrame sf = make_sf(net, Policy::additive(0.5), 43, linear_f, 0.4);
  const FoldPlan folds = make_folds(200, 4, 19);
  const auto a = fit_nuisances(sf, Policy::additive(0.5), {LearnerSpec::linear()},
                               {LearnerSpec::linear_logistic()}, folds);
  const auto b = fit_nuisances(sf, Policy::additive(0.5), {LearnerSpec::linear()},
                               {LearnerSpec::linear_logistic()}, folds);
  CHECK(a.m.m_natural == b.m.m_natural);
  CHECK(a.m.m_shifted == b.m.m_shifted);
  CHECK(a.r.rho == b.r.rho);
  CHECK(a.r.rho_shifted == b.r.rho_shifted);
}
