#include "netshift/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "netshift/rng.hpp"

namespace netshift {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

Network::Network(int n, std::vector<Edge> edges) : n_(n) {
  if (n < 1) throw std::invalid_argument("Network: need at least one node");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  for (auto& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw std::invalid_argument("Network: edge (" + std::to_string(e.src) + "," +
                                  std::to_string(e.dst) + ") outside 0.." +
                                  std::to_string(n - 1));
    if (e.src == e.dst)
      throw std::invalid_argument("Network: self-loop at node " + std::to_string(e.src));
    if (!std::isfinite(e.weight) || e.weight <= 0.0)
      throw std::invalid_argument("Network: edge (" + std::to_string(e.src) + "," +
                                  std::to_string(e.dst) + ") has non-positive or non-finite weight");
    if (e.src > e.dst) std::swap(e.src, e.dst);
    if (!seen.insert(edge_key(e.src, e.dst)).second)
      throw std::invalid_argument("Network: duplicate edge (" + std::to_string(e.src) + "," +
                                  std::to_string(e.dst) + ")");
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  edges_ = std::move(edges);

  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (const auto& e : edges_) {
    ++deg[e.src];
    ++deg[e.dst];
  }
  offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) offset_[i + 1] = offset_[i] + deg[i];
  adj_.resize(static_cast<std::size_t>(offset_[n]));
  std::vector<int> cursor(offset_.begin(), offset_.end() - 1);
  for (const auto& e : edges_) {
    adj_[cursor[e.src]++] = {e.dst, e.weight};
    adj_[cursor[e.dst]++] = {e.src, e.weight};
  }
  for (int i = 0; i < n; ++i)
    std::sort(adj_.begin() + offset_[i], adj_.begin() + offset_[i + 1]);
}

void Network::check_index(int i) const {
  if (i < 0 || i >= n_)
    throw std::out_of_range("Network: node " + std::to_string(i) + " outside 0.." +
                            std::to_string(n_ - 1));
}

int Network::degree(int i) const {
  check_index(i);
  return offset_[i + 1] - offset_[i];
}

std::span<const std::pair<int, double>> Network::neighbors(int i) const {
  check_index(i);
  return {adj_.data() + offset_[i], static_cast<std::size_t>(offset_[i + 1] - offset_[i])};
}

bool Network::has_edge(int i, int j) const {
  check_index(i);
  check_index(j);
  const auto nbrs = neighbors(i);
  const auto it = std::lower_bound(
      nbrs.begin(), nbrs.end(), j,
      [](const std::pair<int, double>& a, int b) { return a.first < b; });
  return it != nbrs.end() && it->first == j;
}

int Network::k_max() const {
  int best = 0;
  for (int i = 0; i < n_; ++i) best = std::max(best, degree(i));
  return best;
}

bool operator==(const Network& a, const Network& b) {
  if (a.size() != b.size() || a.edge_count() != b.edge_count()) return false;
  const auto& ea = a.edges();
  const auto& eb = b.edges();
  for (std::size_t i = 0; i < ea.size(); ++i)
    if (ea[i].src != eb[i].src || ea[i].dst != eb[i].dst || ea[i].weight != eb[i].weight)
      return false;
  return true;
}

DependencyStructure::DependencyStructure(const Network& g) {
  const int n = g.size();
  offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> stamp(static_cast<std::size_t>(n), -1);
  std::vector<int> scratch;
  // first pass sizes, second pass fills; scratch holds one closure at a time
  members_.reserve(static_cast<std::size_t>(n) * 4);
  for (int i = 0; i < n; ++i) {
    scratch.clear();
    const auto mark = [&](int v) {
      if (stamp[v] != i) {
        stamp[v] = i;
        scratch.push_back(v);
      }
    };
    mark(i);
    for (const auto& [j, wj] : g.neighbors(i)) {
      (void)wj;
      mark(j);
      for (const auto& [k, wk] : g.neighbors(j)) {
        (void)wk;
        mark(k);
      }
    }
    std::sort(scratch.begin(), scratch.end());
    members_.insert(members_.end(), scratch.begin(), scratch.end());
    offset_[i + 1] = static_cast<int>(members_.size());
    max_unit_ = std::max(max_unit_, static_cast<int>(scratch.size()));
  }
}

std::span<const int> DependencyStructure::unit(int i) const {
  if (i < 0 || i >= size())
    throw std::out_of_range("DependencyStructure: node " + std::to_string(i) + " out of range");
  return {members_.data() + offset_[i], static_cast<std::size_t>(offset_[i + 1] - offset_[i])};
}

bool DependencyStructure::connected(int i, int j) const {
  const auto u = unit(i);
  if (j < 0 || j >= size())
    throw std::out_of_range("DependencyStructure: node " + std::to_string(j) + " out of range");
  return std::binary_search(u.begin(), u.end(), j);
}

Network generate_erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_erdos_renyi: n must be >= 1");
  if (!(p >= 0.0) || !(p <= 1.0))
    throw std::invalid_argument("generate_erdos_renyi: p must lie in [0, 1]");
  Rng rng = Rng(seed).substream("erdos-renyi");
  std::vector<Edge> edges;
  if (p >= 1.0) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
    return Network(n, std::move(edges));
  }
  if (p > 0.0) {
    // Geometric skips across the linearized upper triangle.
    const double log1mp = std::log1p(-p);
    const unsigned long long total =
        static_cast<unsigned long long>(n) * (n - 1ULL) / 2ULL;
    unsigned long long t = 0;
    int row = 0;
    unsigned long long row_start = 0;  // linear index of (row, row+1)
    while (true) {
      const double u = rng.uniform_open();
      const double skip = std::floor(std::log(u) / log1mp);
      if (skip > static_cast<double>(total)) break;
      t += static_cast<unsigned long long>(skip);
      if (t >= total) break;
      while (t >= row_start + static_cast<unsigned long long>(n - 1 - row)) {
        row_start += static_cast<unsigned long long>(n - 1 - row);
        ++row;
      }
      const int col = row + 1 + static_cast<int>(t - row_start);
      edges.push_back({row, col, 1.0});
      ++t;
    }
  }
  return Network(n, std::move(edges));
}

Network generate_watts_strogatz(int n, int k, double beta, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_watts_strogatz: n must be >= 1");
  if (k < 0 || k % 2 != 0)
    throw std::invalid_argument("generate_watts_strogatz: k must be even and >= 0");
  if (k >= n) throw std::invalid_argument("generate_watts_strogatz: k must be < n");
  if (!(beta >= 0.0) || !(beta <= 1.0))
    throw std::invalid_argument("generate_watts_strogatz: beta must lie in [0, 1]");

  Rng rng = Rng(seed).substream("watts-strogatz");
  std::unordered_set<std::uint64_t> present;
  std::vector<std::pair<int, int>> ring;
  ring.reserve(static_cast<std::size_t>(n) * (k / 2));
  for (int off = 1; off <= k / 2; ++off)
    for (int i = 0; i < n; ++i) {
      const int j = (i + off) % n;
      ring.emplace_back(i, j);
      present.insert(edge_key(i, j));
    }
  // Rewire the far endpoint of each lattice edge with probability beta.
  for (auto& [i, j] : ring) {
    if (!rng.bernoulli(beta)) continue;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      if (t == i || present.count(edge_key(i, t))) continue;
      present.erase(edge_key(i, j));
      present.insert(edge_key(i, t));
      j = t;
      break;
    }
  }
  std::vector<Edge> edges;
  edges.reserve(ring.size());
  for (const auto& [i, j] : ring) edges.push_back({i, j, 1.0});
  return Network(n, std::move(edges));
}

Network generate_scale_free(int n, double lambda, std::uint64_t seed, int m) {
  if (n < 3) throw std::invalid_argument("generate_scale_free: n must be >= 3");
  if (!(lambda > 2.0)) throw std::invalid_argument("generate_scale_free: lambda must be > 2");
  if (m < 1) throw std::invalid_argument("generate_scale_free: m must be >= 1");

  Rng rng = Rng(seed).substream("scale-free");
  const double alpha = 1.0 / (lambda - 1.0);
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += std::pow(static_cast<double>(i + 1), -alpha);
    cumulative[i] = total;
  }
  const auto draw_node = [&]() {
    const double u = rng.uniform() * total;
    return static_cast<int>(std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                            cumulative.begin());
  };

  const unsigned long long possible =
      static_cast<unsigned long long>(n) * (n - 1ULL) / 2ULL;
  const unsigned long long target =
      std::min(static_cast<unsigned long long>(m) * n / 2ULL, possible);
  std::unordered_set<std::uint64_t> present;
  std::vector<Edge> edges;
  edges.reserve(target);
  unsigned long long attempts = 0;
  const unsigned long long attempt_cap = 2000ULL * target + 10000ULL;
  while (edges.size() < target) {
    if (++attempts > attempt_cap)
      throw std::runtime_error("generate_scale_free: could not place the requested edge count");
    const int a = draw_node();
    const int b = draw_node();
    if (a == b) continue;
    if (!present.insert(edge_key(a, b)).second) continue;
    edges.push_back({std::min(a, b), std::max(a, b), 1.0});
  }
  return Network(n, std::move(edges));
}

Network load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open '" + path + "'");
  std::vector<Edge> edges;
  int declared_n = 0;
  int max_id = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = line;
    if (const auto hash = body.find('#'); hash != std::string::npos) {
      // "# nodes: N" records the node count; other comments are skipped
      std::istringstream comment(body.substr(hash + 1));
      std::string word;
      if (comment >> word && word == "nodes:") {
        long n = 0;
        if (comment >> n && n > 0) declared_n = static_cast<int>(n);
      }
      body = body.substr(0, hash);
    }
    // trim
    const auto first = body.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = body.find_last_not_of(" \t\r");
    body = body.substr(first, last - first + 1);

    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream fields(body);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.size() < 2 || tokens.size() > 3)
      throw std::runtime_error("load_edge_list: line " + std::to_string(lineno) +
                               ": expected 'src,dst[,weight]'");
    const auto parse_number = [&](const std::string& tok, const char* what) {
      char* end = nullptr;
      const double value = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error("load_edge_list: line " + std::to_string(lineno) + ": " +
                                 what + " '" + tok + "' is not a number");
      return value;
    };
    const double src_d = parse_number(tokens[0], "source id");
    const double dst_d = parse_number(tokens[1], "target id");
    const double weight = tokens.size() == 3 ? parse_number(tokens[2], "weight") : 1.0;
    if (src_d != std::floor(src_d) || dst_d != std::floor(dst_d))
      throw std::runtime_error("load_edge_list: line " + std::to_string(lineno) +
                               ": node ids must be integers");
    const long src = static_cast<long>(src_d);
    const long dst = static_cast<long>(dst_d);
    if (src < 0 || dst < 0)
      throw std::runtime_error("load_edge_list: line " + std::to_string(lineno) +
                               ": node ids must be >= 0");
    edges.push_back({static_cast<int>(src), static_cast<int>(dst), weight});
    max_id = std::max(max_id, static_cast<int>(std::max(src, dst)));
  }
  const int n = std::max(declared_n, max_id + 1);
  if (n == 0) throw std::runtime_error("load_edge_list: '" + path + "' declares no nodes");
  return Network(n, std::move(edges));
}

void save_edge_list(const Network& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open '" + path + "' for writing");
  out << "# nodes: " << g.size() << "\n";
  char buf[64];
  for (const auto& e : g.edges()) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", e.src, e.dst, e.weight);
    out << buf;
  }
  if (!out) throw std::runtime_error("save_edge_list: write to '" + path + "' failed");
}

}  // namespace netshift
