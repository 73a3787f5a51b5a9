#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "netshift/network.hpp"
#include "netshift/policy.hpp"
#include "netshift/rng.hpp"
#include "netshift/summary.hpp"

using namespace netshift;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("additive policy shifts and inverts exactly") {
  const Policy p = Policy::additive(0.25);
  CHECK(p.apply(1.0) == 1.25);
  CHECK(p.apply(-3.5) == -3.25);
  CHECK(p.inverse(1.25) == 1.0);
  CHECK(p.kind() == PolicyKind::kAdditive);
  CHECK(p.delta() == 0.25);
  CHECK_FALSE(p.is_identity());
  CHECK(Policy::additive(0.0).is_identity());
}

TEST_CASE("multiplicative policy scales and requires a positive delta") {
  const Policy p = Policy::multiplicative(2.0);
  CHECK(p.apply(3.0) == 6.0);
  CHECK(p.inverse(6.0) == 3.0);
  CHECK_FALSE(p.is_identity());
  CHECK(Policy::multiplicative(1.0).is_identity());
  CHECK_THROWS_AS(Policy::multiplicative(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Policy::multiplicative(-2.0), std::invalid_argument);
  CHECK_THROWS_AS(Policy::multiplicative(kInf), std::invalid_argument);
  CHECK_THROWS_AS(Policy::additive(NAN), std::invalid_argument);
}

TEST_CASE("piecewise policy shifts only inside its region") {
  const Policy p = Policy::piecewise_additive(1.0, Region{0.0, kInf});
  CHECK(p.apply(2.0) == 3.0);
  CHECK(p.apply(-2.0) == -2.0);  // outside the region
  CHECK(p.inverse(3.0) == 2.0);
  CHECK(p.inverse(-2.0) == -2.0);
  CHECK_FALSE(p.is_identity());
  CHECK(Policy::piecewise_additive(0.0, Region{0.0, kInf}).is_identity());

  // per-unit multipliers scale the shift
  const Policy pm = Policy::piecewise_additive(2.0, Region{0.0, kInf}, "w");
  CHECK(pm.apply(1.0, 0.5) == 2.0);
  CHECK(pm.inverse(2.0, 0.5) == 1.0);
  CHECK(pm.apply(-1.0, 0.5) == -1.0);
}

TEST_CASE("bounded piecewise regions reject ambiguous overlap") {
  // Shifting [0, 1] by 0.5 lands in (1, 1.5], which the identity branch also
  // produces, so apply() would not be invertible.
  CHECK_THROWS_WITH_AS(Policy::piecewise_additive(0.5, Region{0.0, 1.0}),
                       doctest::Contains("ambiguous piecewise image overlap"),
                       std::invalid_argument);
  // Shifting past the region's width is fine only if nothing outside gets hit;
  // a shift larger than the gap to +inf is impossible, so a right-unbounded
  // region never collides.
  CHECK_NOTHROW(Policy::piecewise_additive(5.0, Region{0.0, kInf}));
  CHECK_THROWS_AS(Policy::piecewise_additive(1.0, Region{2.0, 1.0}), std::invalid_argument);

  // With a multiplier column the check is deferred to data contact and names
  // the row.
  const Policy pm = Policy::piecewise_additive(0.5, Region{0.0, 1.0}, "w");
  CHECK_NOTHROW(pm.validate_multiplier(0.0, 3));
  CHECK_THROWS_WITH_AS(pm.validate_multiplier(1.0, 3), doctest::Contains("row 3"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(pm.validate_multiplier(NAN, 11), doctest::Contains("row 11"),
                       std::runtime_error);
}

TEST_CASE("round trips hold to machine precision across the line") {
  Rng rng(42);
  const Policy policies[] = {
      Policy::additive(0.7),
      Policy::multiplicative(3.0),
      Policy::piecewise_additive(2.0, Region{-1.0, kInf}),
      Policy::piecewise_additive(1.5, Region{0.0, kInf}, "w"),
  };
  for (const Policy& p : policies) {
    for (int t = 0; t < 1000; ++t) {
      const double a = (rng.uniform() - 0.5) * 200.0;
      const double w = 0.5 + rng.uniform();
      const double there = p.apply(a, w);
      CHECK(std::fabs(p.inverse(there, w) - a) <= 1e-12 * std::max(1.0, std::fabs(a)));
    }
  }
}

TEST_CASE("json round trip preserves every kind") {
  const Policy policies[] = {
      Policy::additive(0.25),
      Policy::multiplicative(2.0),
      Policy::piecewise_additive(1.0, Region{0.0, kInf}),
      Policy::piecewise_additive(1.0, Region{-kInf, 4.0}, "w"),
  };
  for (const Policy& p : policies) {
    const Policy back = Policy::from_json(p.to_json());
    CHECK(back.kind() == p.kind());
    CHECK(back.delta() == p.delta());
    CHECK(back.region().lower == p.region().lower);
    CHECK(back.region().upper == p.region().upper);
    CHECK(back.multiplier_column() == p.multiplier_column());
  }
  CHECK(Policy::additive(0.25).to_json().at("kind").get<std::string>() == "additive");
  CHECK(Policy::piecewise_additive(1.0, Region{0.0, kInf}).to_json().at("kind") ==
        "piecewise_additive");
}

TEST_CASE("policy json rejects malformed input") {
  CHECK_THROWS_AS(Policy::from_json(Json{{"kind", "additive"}, {"delta", 0.1}, {"bogus", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(Policy::from_json(Json{{"delta", 0.1}}), ConfigError);
  CHECK_THROWS_AS(Policy::from_json(Json{{"kind", "squaring"}, {"delta", 2.0}}), ConfigError);
  CHECK_THROWS_AS(Policy::from_json(Json{{"kind", "multiplicative"}, {"delta", -1.0}}),
                  ConfigError);
  CHECK_THROWS_AS(
      Policy::from_json(Json{{"kind", "piecewise_additive"},
                             {"delta", 0.5},
                             {"region", Json{{"lower", 0.0}, {"upper", 1.0}}}}),
      ConfigError);  // ambiguous overlap surfaces as a config error
  const Json ok{{"kind", "piecewise_additive"},
                {"delta", 1.0},
                {"region", Json{{"lower", 0.0}}}};
  CHECK_NOTHROW(Policy::from_json(ok));
}

TEST_CASE("induced weight matches the change of variables per summary row") {
  const Network path(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const Network lone(3, {{0, 1, 1.0}});  // node 2 has an empty summary row
  SummarySpec sum_spec;

  for (int i = 0; i < 3; ++i) {
    CHECK(induced_weight(Policy::additive(0.7), sum_spec, path, i) == 1.0);
    CHECK(induced_weight(Policy::piecewise_additive(1.0, Region{0.0, kInf}), sum_spec, path, i) ==
          1.0);
    CHECK(induced_weight(Policy::multiplicative(4.0), sum_spec, path, i) == 0.25);
  }
  // empty row: constant summary, weight pinned to 1
  CHECK(induced_weight(Policy::multiplicative(4.0), sum_spec, lone, 2) == 1.0);
  CHECK(induced_weight(Policy::multiplicative(4.0), sum_spec, lone, 0) == 0.25);

  // include_self makes every row non-empty even without edges
  SummarySpec self_spec;
  self_spec.include_self = true;
  const Network empty(2, {});
  CHECK(induced_weight(Policy::multiplicative(4.0), self_spec, empty, 0) == 0.25);

  const auto all = induced_weights(Policy::multiplicative(2.0), sum_spec, lone);
  CHECK(all == std::vector<double>{0.5, 0.5, 1.0});
  CHECK_THROWS_AS(induced_weight(Policy::additive(0.1), sum_spec, path, 7), std::out_of_range);
}
