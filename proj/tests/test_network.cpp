#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <vector>

#include "netshift/network.hpp"
#include "netshift/stats.hpp"

using namespace netshift;

namespace {
Network path3() { return Network(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }
}

TEST_CASE("degree and neighbors on a path") {
  const Network g = path3();
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 2);
  CHECK(g.degree(2) == 1);
  CHECK(g.k_max() == 2);
  const auto nb = g.neighbors(1);
  REQUIRE(nb.size() == 2);
  CHECK(nb[0].first == 0);
  CHECK(nb[1].first == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK_THROWS_AS(g.degree(3), std::out_of_range);
  CHECK_THROWS_AS(g.degree(-1), std::out_of_range);
}

TEST_CASE("construction rejects malformed edges") {
  CHECK_THROWS_AS(Network(3, {{0, 0, 1.0}}), std::invalid_argument);           // self-loop
  CHECK_THROWS_AS(Network(3, {{0, 1, 1.0}, {1, 0, 1.0}}), std::invalid_argument);  // duplicate
  CHECK_THROWS_AS(Network(3, {{0, 1, 0.0}}), std::invalid_argument);           // zero weight
  CHECK_THROWS_AS(Network(3, {{0, 1, -2.0}}), std::invalid_argument);          // negative
  CHECK_THROWS_AS(Network(3, {{0, 3, 1.0}}), std::invalid_argument);           // out of range
  CHECK_THROWS_AS(Network(0, {}), std::invalid_argument);
}

TEST_CASE("k_max is the maximum degree") {
  // star with 5 leaves
  const Network star(6, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}, {0, 5, 1.0}});
  CHECK(star.k_max() == 5);
  const Network empty(4, {});
  CHECK(empty.k_max() == 0);
}

TEST_CASE("dependency structure is the two-hop closure") {
  const Network g = path3();
  const DependencyStructure dep(g);
  // endpoints share the middle node, so everything depends on everything
  CHECK(dep.connected(0, 2));
  CHECK(dep.connected(2, 0));
  CHECK(dep.connected(1, 1));
  CHECK(dep.max_unit() == 3);

  const Network two_comp(3, {{0, 1, 1.0}});
  const DependencyStructure d2(two_comp);
  CHECK(d2.connected(0, 1));
  CHECK_FALSE(d2.connected(0, 2));
  CHECK_FALSE(d2.connected(2, 1));

  const Network k4(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {1, 2, 1}, {1, 3, 1}, {2, 3, 1}});
  const DependencyStructure d4(k4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(d4.connected(i, j));

  const Network empty(5, {});
  const DependencyStructure de(empty);
  CHECK(de.total_members() == 5);  // diagonal only
  for (int i = 0; i < 5; ++i) {
    CHECK(de.unit(i).size() == 1);
    CHECK(de.unit(i)[0] == i);
  }
}

TEST_CASE("five-cycle dependency units cover the whole cycle") {
  const Network c5(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}, {0, 4, 1.0}});
  const DependencyStructure dep(c5);
  CHECK(dep.max_unit() == 5);
  for (int i = 0; i < 5; ++i) {
    const auto unit = dep.unit(i);
    REQUIRE(unit.size() == 5);
    for (int j = 0; j < 5; ++j) CHECK(unit[static_cast<size_t>(j)] == j);
  }
}

TEST_CASE("erdos-renyi endpoints and moments") {
  const Network none = generate_erdos_renyi(50, 0.0, 1);
  CHECK(none.edge_count() == 0);
  const Network full = generate_erdos_renyi(4, 1.0, 1);
  CHECK(full.edge_count() == 6);
  CHECK_THROWS_AS(generate_erdos_renyi(10, -0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_erdos_renyi(10, 1.1, 1), std::invalid_argument);

  // mean degree about 3 and edge count within 3 sigma of its binomial mean
  const int n = 10000;
  const double p = 3.0 / n;
  const double edge_mean = p * n * (n - 1) / 2.0;
  const double edge_sd = std::sqrt(edge_mean * (1.0 - p));
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const Network g = generate_erdos_renyi(n, p, seed);
    const double mean_degree = 2.0 * g.edge_count() / static_cast<double>(n);
    CHECK(mean_degree > 2.8);
    CHECK(mean_degree < 3.2);
    CHECK(std::fabs(g.edge_count() - edge_mean) < 4.0 * edge_sd);
  }
}

TEST_CASE("generators are deterministic in the seed") {
  CHECK(generate_erdos_renyi(500, 0.01, 9) == generate_erdos_renyi(500, 0.01, 9));
  CHECK_FALSE(generate_erdos_renyi(500, 0.01, 9) == generate_erdos_renyi(500, 0.01, 10));
  CHECK(generate_watts_strogatz(200, 6, 0.5, 3) == generate_watts_strogatz(200, 6, 0.5, 3));
  CHECK(generate_scale_free(200, 3.5, 4) == generate_scale_free(200, 3.5, 4));
}

TEST_CASE("watts-strogatz preserves the edge count exactly") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const Network g = generate_watts_strogatz(1000, 6, 0.5, seed);
    CHECK(g.edge_count() == 3000);
    CHECK(g.k_max() >= 6);
  }
  const Network ring = generate_watts_strogatz(8, 2, 0.0, 1);
  for (int i = 0; i < 8; ++i) CHECK(ring.degree(i) == 2);
  CHECK(ring.has_edge(0, 1));
  CHECK(ring.has_edge(0, 7));

  CHECK_THROWS_AS(generate_watts_strogatz(10, 3, 0.5, 1), std::invalid_argument);   // odd K
  CHECK_THROWS_AS(generate_watts_strogatz(6, 6, 0.5, 1), std::invalid_argument);    // K >= n
  CHECK_THROWS_AS(generate_watts_strogatz(10, 2, 1.5, 1), std::invalid_argument);   // beta
}

TEST_CASE("scale-free basics") {
  const Network tiny = generate_scale_free(3, 3.5, 1, 2);
  CHECK(tiny.edge_count() <= 3);
  for (const auto& e : tiny.edges()) CHECK(e.src != e.dst);
  CHECK_THROWS_AS(generate_scale_free(100, 2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_scale_free(2, 3.5, 1), std::invalid_argument);

  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const Network g = generate_scale_free(5000, 3.5, seed);
    CHECK(g.edge_count() == 5000);  // m*n/2 with m=2
  }
}

TEST_CASE("scale-free degree tail has the configured exponent") {
  // Pool degree counts over 10 seeds at n=10000 and fit a log-log slope of
  // the histogram over degrees >= 5. The tail index should be close to -3.5.
  std::map<int, int> counts;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const Network g = generate_scale_free(10000, 3.5, seed);
    for (int i = 0; i < g.size(); ++i) ++counts[g.degree(i)];
  }
  std::vector<double> lx, ly;
  for (const auto& [deg, cnt] : counts) {
    if (deg < 5 || cnt < 20) continue;
    lx.push_back(std::log(static_cast<double>(deg)));
    ly.push_back(std::log(static_cast<double>(cnt)));
  }
  REQUIRE(lx.size() >= 4);
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  CHECK(slope > -4.0);
  CHECK(slope < -3.0);
}

TEST_CASE("edge list round trip keeps isolated nodes and weights") {
  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string path = dir + "/netshift_test_edges.txt";
  const Network g(5, {{0, 1, 1.0}, {1, 3, 2.5}});  // node 4 isolated
  save_edge_list(g, path);
  const Network back = load_edge_list(path);
  CHECK(back == g);
  CHECK(back.size() == 5);
  std::filesystem::remove(path);

  CHECK_THROWS(load_edge_list(dir + "/netshift_does_not_exist.txt"));

  const std::string bad = dir + "/netshift_bad_edges.txt";
  std::FILE* f = std::fopen(bad.c_str(), "w");
  std::fputs("0,1\n1,notanumber\n", f);
  std::fclose(f);
  CHECK_THROWS(load_edge_list(bad));
  std::filesystem::remove(bad);
}
