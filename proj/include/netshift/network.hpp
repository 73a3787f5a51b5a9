// Undirected interference networks, their two-hop dependency structure, and
// the synthetic graph generators.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace netshift {

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 1.0;
};

// Sparse symmetric weighted graph over nodes 0..n-1. Self-loops, duplicate
// edges, and non-positive or non-finite weights are rejected at construction.
class Network {
 public:
  Network(int n, std::vector<Edge> edges);

  int size() const { return n_; }
  int degree(int i) const;
  int edge_count() const { return static_cast<int>(edges_.size()); }

  // Neighbors of i with edge weights, sorted by neighbor id.
  std::span<const std::pair<int, double>> neighbors(int i) const;

  // Canonical edge list: src < dst, sorted lexicographically.
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_edge(int i, int j) const;

  // Maximum node degree; 0 for an edgeless graph.
  int k_max() const;

 private:
  void check_index(int i) const;

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> offset_;
  std::vector<std::pair<int, double>> adj_;
};

bool operator==(const Network& a, const Network& b);

// Two-hop closures: unit(i) is the sorted set {i} u F_i u {friends of friends}.
// connected(i, j) is the pairwise dependency indicator G(i, j); it is symmetric
// and reflexive by construction.
class DependencyStructure {
 public:
  explicit DependencyStructure(const Network& g);

  int size() const { return static_cast<int>(offset_.size()) - 1; }
  std::span<const int> unit(int i) const;
  bool connected(int i, int j) const;
  int max_unit() const { return max_unit_; }
  std::size_t total_members() const { return members_.size(); }

 private:
  std::vector<int> offset_;
  std::vector<int> members_;
  int max_unit_ = 0;
};

// G(n, p) by geometric skips over the upper triangle; p in [0, 1].
Network generate_erdos_renyi(int n, double p, std::uint64_t seed);

// Watts-Strogatz: ring lattice with k neighbors per node (k even, k < n),
// then each clockwise edge is rewired with probability beta. The edge count
// n*k/2 is preserved exactly.
Network generate_watts_strogatz(int n, int k, double beta, std::uint64_t seed);

// Static scale-free graph (Goh-Kahng-Kim): node i gets fitness (i+1)^(-1/(lambda-1))
// and m*n/2 distinct edges are sampled proportional to fitness products.
// Requires lambda > 2 and n >= 3.
Network generate_scale_free(int n, double lambda, std::uint64_t seed, int m = 2);

// Plain-text edge list: one "src,dst[,weight]" per line, 0-based ids, '#'
// starts a comment. save_edge_list records the node count in a comment so
// isolated trailing nodes survive a round trip.
Network load_edge_list(const std::string& path);
void save_edge_list(const Network& g, const std::string& path);

}  // namespace netshift
