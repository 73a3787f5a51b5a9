#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "netshift/rng.hpp"
#include "netshift/stats.hpp"

using namespace netshift;

TEST_CASE("same seed reproduces the stream, different seeds do not") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next();
    all_equal = all_equal && x == b.next();
    any_diff = any_diff || x != c.next();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("substreams are stable and mutually distinct") {
  Rng root(7);
  Rng s1 = root.substream("graph");
  Rng s2 = root.substream("graph");
  Rng s3 = root.substream("covariates");
  CHECK(s1.next() == s2.next());
  CHECK(s1.next() != s3.next());

  // Drawing from the parent does not perturb a child created earlier.
  Rng p(9);
  Rng child = p.substream(5);
  const auto first = child.next();
  for (int i = 0; i < 10; ++i) p.next();
  Rng child2 = p.substream(5);
  CHECK(child2.next() == first);
}

TEST_CASE("uniform stays in [0,1) and has the right mean") {
  Rng r(1);
  double sum = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / 200000 - 0.5) < 0.005);

  Rng q(2);
  for (int i = 0; i < 10000; ++i) {
    const double u = q.uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("uniform_int respects the bound and rejects zero") {
  Rng r(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = r.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<size_t>(v)];
  }
  for (int c : counts) CHECK(std::fabs(c - 10000.0) < 500.0);
  CHECK_THROWS_AS(r.uniform_int(0), std::invalid_argument);
}

TEST_CASE("normal moments") {
  Rng r(4);
  std::vector<double> draws(200000);
  for (auto& d : draws) d = r.normal();
  CHECK(std::fabs(mean(draws)) < 0.01);
  CHECK(std::fabs(sample_variance(draws) - 1.0) < 0.02);

  Rng s(5);
  std::vector<double> shifted(100000);
  for (auto& d : shifted) d = s.normal(3.0, 2.0);
  CHECK(std::fabs(mean(shifted) - 3.0) < 0.03);
  CHECK(std::fabs(sample_variance(shifted) - 4.0) < 0.1);
}

TEST_CASE("truncated normal respects the cut and keeps the mean") {
  Rng r(6);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double d = r.truncated_normal(10.0, 2.0);
    REQUIRE(d >= 10.0 - 12.0);
    REQUIRE(d <= 10.0 + 12.0);
    sum += d;
  }
  CHECK(std::fabs(sum / 100000 - 10.0) < 0.03);

  Rng tight(7);
  for (int i = 0; i < 1000; ++i) {
    const double d = tight.truncated_normal(0.0, 1.0, 0.5);
    REQUIRE(std::fabs(d) <= 0.5 + 1e-12);
  }
}

TEST_CASE("gamma and beta moments") {
  Rng r(8);
  std::vector<double> g(200000);
  for (auto& d : g) d = r.gamma(2.0, 4.0);
  CHECK(std::fabs(mean(g) - 8.0) < 0.1);       // shape*scale
  CHECK(std::fabs(sample_variance(g) - 32.0) < 1.0);  // shape*scale^2

  Rng s(9);
  std::vector<double> b(200000);
  for (auto& d : b) d = s.beta(3.0, 2.0);
  CHECK(std::fabs(mean(b) - 0.6) < 0.005);
  for (double d : b) REQUIRE((d > 0.0 && d < 1.0));

  // shape < 1 goes through the boost branch
  Rng t(10);
  std::vector<double> small(100000);
  for (auto& d : small) d = t.gamma(0.5, 1.0);
  CHECK(std::fabs(mean(small) - 0.5) < 0.02);
  CHECK_THROWS_AS(t.gamma(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(t.gamma(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("poisson moments, including the high-rate fallback") {
  Rng r(11);
  std::vector<double> p(100000);
  for (auto& d : p) d = static_cast<double>(r.poisson(100.0));
  CHECK(std::fabs(mean(p) - 100.0) < 0.3);
  CHECK(std::fabs(sample_variance(p) - 100.0) < 3.0);

  Rng s(12);
  std::vector<double> big(50000);
  for (auto& d : big) d = static_cast<double>(s.poisson(600.0));
  CHECK(std::fabs(mean(big) - 600.0) < 1.0);
  CHECK(s.poisson(0.0) == 0);
  CHECK_THROWS_AS(s.poisson(-1.0), std::invalid_argument);
}

TEST_CASE("bernoulli frequency") {
  Rng r(13);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += r.bernoulli(0.6) ? 1 : 0;
  CHECK(std::fabs(hits / 100000.0 - 0.6) < 0.01);
}
