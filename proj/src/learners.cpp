#include "netshift/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>

namespace netshift {

namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) { return std::min(1.0 - kProbClamp, std::max(kProbClamp, p)); }

}  // namespace

LearnerSpec LearnerSpec::mean_only() { return LearnerSpec{}; }

LearnerSpec LearnerSpec::linear() {
  LearnerSpec s;
  s.kind = LearnerKind::kLinearLeastSquares;
  return s;
}

LearnerSpec LearnerSpec::ridge(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("LearnerSpec: ridge lambda must be finite and >= 0");
  LearnerSpec s;
  s.kind = LearnerKind::kRidge;
  s.ridge_lambda = lambda;
  return s;
}

LearnerSpec LearnerSpec::knn(int k) {
  if (k < 1) throw std::invalid_argument("LearnerSpec: k must be >= 1");
  LearnerSpec s;
  s.kind = LearnerKind::kKNearestNeighbors;
  s.knn_k = k;
  return s;
}

namespace {
LearnerSpec boosted_base(LearnerKind kind, int rounds, double learning_rate, int max_depth) {
  if (rounds < 1) throw std::invalid_argument("LearnerSpec: rounds must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("LearnerSpec: learning rate must be finite and > 0");
  if (max_depth < 1 || max_depth > 16)
    throw std::invalid_argument("LearnerSpec: max depth must lie in [1, 16]");
  LearnerSpec s;
  s.kind = kind;
  s.rounds = rounds;
  s.learning_rate = learning_rate;
  s.max_depth = max_depth;
  return s;
}
}  // namespace

LearnerSpec LearnerSpec::boosted_stumps(int rounds, double learning_rate, int max_depth) {
  return boosted_base(LearnerKind::kBoostedStumps, rounds, learning_rate, max_depth);
}

LearnerSpec LearnerSpec::intercept_logistic() {
  LearnerSpec s;
  s.kind = LearnerKind::kInterceptOnlyLogistic;
  return s;
}

LearnerSpec LearnerSpec::linear_logistic() {
  LearnerSpec s;
  s.kind = LearnerKind::kLinearLogistic;
  return s;
}

LearnerSpec LearnerSpec::boosted_logistic(int rounds, double learning_rate, int max_depth) {
  return boosted_base(LearnerKind::kBoostedStumpsLogistic, rounds, learning_rate, max_depth);
}

bool LearnerSpec::is_classifier() const {
  return kind == LearnerKind::kInterceptOnlyLogistic || kind == LearnerKind::kLinearLogistic ||
         kind == LearnerKind::kBoostedStumpsLogistic;
}

std::string LearnerSpec::name() const {
  switch (kind) {
    case LearnerKind::kMeanOnly: return "mean-only";
    case LearnerKind::kLinearLeastSquares: return "linear-least-squares";
    case LearnerKind::kRidge: return "ridge(" + fmt_num(ridge_lambda) + ")";
    case LearnerKind::kKNearestNeighbors:
      return "k-nearest-neighbors(" + std::to_string(knn_k) + ")";
    case LearnerKind::kBoostedStumps:
      return "boosted-stumps(" + std::to_string(rounds) + "," + fmt_num(learning_rate) + "," +
             std::to_string(max_depth) + ")";
    case LearnerKind::kInterceptOnlyLogistic: return "intercept-only-logistic";
    case LearnerKind::kLinearLogistic: return "linear-logistic";
    case LearnerKind::kBoostedStumpsLogistic:
      return "boosted-stumps-logistic(" + std::to_string(rounds) + "," + fmt_num(learning_rate) +
             "," + std::to_string(max_depth) + ")";
  }
  return "?";
}

LearnerSpec LearnerSpec::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("learner: expected an object with a string 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "mean-only") {
      require_keys(j, {"kind"}, "learner");
      return mean_only();
    }
    if (kind == "linear-least-squares") {
      require_keys(j, {"kind"}, "learner");
      return linear();
    }
    if (kind == "ridge") {
      require_keys(j, {"kind", "lambda"}, "learner");
      return ridge(j.contains("lambda") ? require_number(j, "lambda", "learner") : 1.0);
    }
    if (kind == "k-nearest-neighbors") {
      require_keys(j, {"kind", "k"}, "learner");
      return knn(j.contains("k") ? static_cast<int>(require_number(j, "k", "learner")) : 10);
    }
    if (kind == "intercept-only-logistic") {
      require_keys(j, {"kind"}, "learner");
      return intercept_logistic();
    }
    const bool boosted = kind == "boosted-stumps";
    const bool boosted_cls = kind == "boosted-stumps-logistic";
    if (boosted || boosted_cls) {
      require_keys(j, {"kind", "rounds", "learning_rate", "max_depth", "min_leaf", "bins"},
                   "learner");
      LearnerSpec s = boosted_base(
          boosted ? LearnerKind::kBoostedStumps : LearnerKind::kBoostedStumpsLogistic,
          j.contains("rounds") ? static_cast<int>(require_number(j, "rounds", "learner")) : 200,
          j.contains("learning_rate") ? require_number(j, "learning_rate", "learner") : 0.1,
          j.contains("max_depth") ? static_cast<int>(require_number(j, "max_depth", "learner"))
                                  : 3);
      if (j.contains("min_leaf")) s.min_leaf = static_cast<int>(require_number(j, "min_leaf", "learner"));
      if (j.contains("bins")) s.bins = static_cast<int>(require_number(j, "bins", "learner"));
      if (s.min_leaf < 1) throw ConfigError("learner: min_leaf must be >= 1");
      if (s.bins < 2 || s.bins > 1024) throw ConfigError("learner: bins must lie in [2, 1024]");
      return s;
    }
    if (kind == "linear-logistic") {
      require_keys(j, {"kind"}, "learner");
      return linear_logistic();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("learner: ") + e.what());
  }
  throw ConfigError("learner: unknown kind '" + kind + "'");
}

Json LearnerSpec::to_json() const {
  Json j;
  switch (kind) {
    case LearnerKind::kMeanOnly: j["kind"] = "mean-only"; break;
    case LearnerKind::kLinearLeastSquares: j["kind"] = "linear-least-squares"; break;
    case LearnerKind::kRidge:
      j["kind"] = "ridge";
      j["lambda"] = ridge_lambda;
      break;
    case LearnerKind::kKNearestNeighbors:
      j["kind"] = "k-nearest-neighbors";
      j["k"] = knn_k;
      break;
    case LearnerKind::kBoostedStumps:
    case LearnerKind::kBoostedStumpsLogistic:
      j["kind"] = kind == LearnerKind::kBoostedStumps ? "boosted-stumps" : "boosted-stumps-logistic";
      j["rounds"] = rounds;
      j["learning_rate"] = learning_rate;
      j["max_depth"] = max_depth;
      j["min_leaf"] = min_leaf;
      j["bins"] = bins;
      break;
    case LearnerKind::kInterceptOnlyLogistic: j["kind"] = "intercept-only-logistic"; break;
    case LearnerKind::kLinearLogistic: j["kind"] = "linear-logistic"; break;
  }
  return j;
}

std::vector<double> Model::predict(const Matrix& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows));
  for (int i = 0; i < x.rows; ++i) out[static_cast<std::size_t>(i)] = predict_one(x.row(i), x.cols);
  return out;
}

namespace {

class ConstantModel final : public Model {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  double predict_one(const double*, int) const override { return value_; }

 private:
  double value_;
};

// Linear predictor; optional sigmoid link turns it into a classifier.
class LinearModel final : public Model {
 public:
  LinearModel(std::vector<double> coef, bool logit) : coef_(std::move(coef)), logit_(logit) {}
  double predict_one(const double* x, int p) const override {
    double t = coef_[0];
    const int q = std::min<int>(p, static_cast<int>(coef_.size()) - 1);
    for (int j = 0; j < q; ++j) t += coef_[static_cast<std::size_t>(j + 1)] * x[j];
    return logit_ ? sigmoid(t) : t;
  }

 private:
  std::vector<double> coef_;  // intercept first
  bool logit_;
};

class KnnModel final : public Model {
 public:
  KnnModel(const Matrix& x, std::vector<double> y, int k)
      : x_(x), y_(std::move(y)), k_(std::min<int>(k, x.rows)) {
    center_.assign(static_cast<std::size_t>(x_.cols), 0.0);
    scale_.assign(static_cast<std::size_t>(x_.cols), 1.0);
    for (int j = 0; j < x_.cols; ++j) {
      double m = 0.0;
      for (int i = 0; i < x_.rows; ++i) m += x_.at(i, j);
      m /= x_.rows;
      double ss = 0.0;
      for (int i = 0; i < x_.rows; ++i) ss += (x_.at(i, j) - m) * (x_.at(i, j) - m);
      const double sd = x_.rows > 1 ? std::sqrt(ss / (x_.rows - 1)) : 0.0;
      center_[static_cast<std::size_t>(j)] = m;
      scale_[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
    }
    for (int i = 0; i < x_.rows; ++i)
      for (int j = 0; j < x_.cols; ++j)
        x_.at(i, j) = (x_.at(i, j) - center_[static_cast<std::size_t>(j)]) / scale_[static_cast<std::size_t>(j)];
  }

  double predict_one(const double* x, int p) const override {
    const int q = std::min(p, x_.cols);
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(x_.rows));
    for (int i = 0; i < x_.rows; ++i) {
      double d = 0.0;
      const double* r = x_.row(i);
      for (int j = 0; j < q; ++j) {
        const double z = (x[j] - center_[static_cast<std::size_t>(j)]) / scale_[static_cast<std::size_t>(j)] - r[j];
        d += z * z;
      }
      dist[static_cast<std::size_t>(i)] = {d, i};
    }
    std::nth_element(dist.begin(), dist.begin() + (k_ - 1), dist.end());
    double s = 0.0;
    for (int i = 0; i < k_; ++i) s += y_[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)];
    return s / k_;
  }

 private:
  Matrix x_;  // standardized in place
  std::vector<double> y_;
  int k_;
  std::vector<double> center_;
  std::vector<double> scale_;
};

// Histogram-based gradient boosted trees with Newton leaf values, squared or
// logistic loss. No row or feature subsampling, so fits are deterministic.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class BoostedModel final : public Model {
 public:
  BoostedModel(const LearnerSpec& spec, const Matrix& x, const std::vector<double>& y, bool logit)
      : logit_(logit), lr_(spec.learning_rate) {
    const int n = x.rows;
    const int p = x.cols;
    const std::size_t un = static_cast<std::size_t>(n);

    if (logit_) {
      double rate = 0.0;
      for (double v : y) rate += v;
      rate = clamp_prob(n > 0 ? rate / n : 0.5);
      base_ = std::log(rate / (1.0 - rate));
    } else {
      base_ = 0.0;
      for (double v : y) base_ += v;
      if (n > 0) base_ /= n;
    }

    // Quantile bin edges per feature; thresholds equal observed values, so
    // "x <= edge" cuts between consecutive sorted values.
    edges_.resize(static_cast<std::size_t>(p));
    std::vector<double> col(un);
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = x.at(i, j);
      std::sort(col.begin(), col.end());
      auto& e = edges_[static_cast<std::size_t>(j)];
      for (int b = 1; b < spec.bins; ++b) {
        const std::size_t pos = static_cast<std::size_t>(
            static_cast<long long>(b) * n / spec.bins);
        if (pos >= un) break;
        const double v = col[pos];
        if (v < col[un - 1] && (e.empty() || v > e.back())) e.push_back(v);
      }
    }

    // Per-feature bin index of each row.
    std::vector<std::vector<uint16_t>> binidx(static_cast<std::size_t>(p));
    int max_bins = 1;
    for (int j = 0; j < p; ++j) {
      auto& e = edges_[static_cast<std::size_t>(j)];
      auto& bi = binidx[static_cast<std::size_t>(j)];
      bi.resize(un);
      for (int i = 0; i < n; ++i) {
        const double v = x.at(i, j);
        bi[static_cast<std::size_t>(i)] = static_cast<uint16_t>(
            std::lower_bound(e.begin(), e.end(), v) - e.begin());
      }
      max_bins = std::max(max_bins, static_cast<int>(e.size()) + 1);
    }

    std::vector<double> score(un, base_);
    std::vector<double> g(un), h(un);
    std::vector<int> rows(un);
    std::vector<double> hist_g(static_cast<std::size_t>(max_bins));
    std::vector<double> hist_h(static_cast<std::size_t>(max_bins));
    std::vector<int> hist_c(static_cast<std::size_t>(max_bins));
    std::vector<int> scratch(un);

    constexpr double kReg = 1e-6;

    struct Frontier {
      int node;
      int begin;
      int end;
      int depth;
    };

    trees_.reserve(static_cast<std::size_t>(spec.rounds));
    for (int round = 0; round < spec.rounds; ++round) {
      for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (logit_) {
          const double pr = sigmoid(score[ui]);
          g[ui] = pr - y[ui];
          h[ui] = std::max(pr * (1.0 - pr), 1e-16);
        } else {
          g[ui] = score[ui] - y[ui];
          h[ui] = 1.0;
        }
      }

      std::vector<TreeNode> nodes;
      nodes.emplace_back();
      for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
      std::vector<Frontier> stack{{0, 0, n, 0}};
      bool any_split = false;

      while (!stack.empty()) {
        const Frontier f = stack.back();
        stack.pop_back();
        const int count = f.end - f.begin;
        double g_total = 0.0, h_total = 0.0;
        for (int r = f.begin; r < f.end; ++r) {
          g_total += g[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
          h_total += h[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
        }

        int best_feature = -1, best_bin = -1;
        double best_gain = 1e-12;
        const double parent_obj = g_total * g_total / (h_total + kReg);
        if (f.depth < spec.max_depth && count >= 2 * spec.min_leaf) {
          for (int j = 0; j < p; ++j) {
            const auto& e = edges_[static_cast<std::size_t>(j)];
            if (e.empty()) continue;
            const int nb = static_cast<int>(e.size()) + 1;
            std::fill(hist_g.begin(), hist_g.begin() + nb, 0.0);
            std::fill(hist_h.begin(), hist_h.begin() + nb, 0.0);
            std::fill(hist_c.begin(), hist_c.begin() + nb, 0);
            const auto& bi = binidx[static_cast<std::size_t>(j)];
            for (int r = f.begin; r < f.end; ++r) {
              const int row = rows[static_cast<std::size_t>(r)];
              const int b = bi[static_cast<std::size_t>(row)];
              hist_g[static_cast<std::size_t>(b)] += g[static_cast<std::size_t>(row)];
              hist_h[static_cast<std::size_t>(b)] += h[static_cast<std::size_t>(row)];
              ++hist_c[static_cast<std::size_t>(b)];
            }
            double gl = 0.0, hl = 0.0;
            int cl = 0;
            // Split after bin t: rows with bin <= t (x <= e[t]) go left.
            for (int t = 0; t + 1 < nb; ++t) {
              gl += hist_g[static_cast<std::size_t>(t)];
              hl += hist_h[static_cast<std::size_t>(t)];
              cl += hist_c[static_cast<std::size_t>(t)];
              if (cl < spec.min_leaf) continue;
              if (count - cl < spec.min_leaf) break;
              const double gr = g_total - gl, hr = h_total - hl;
              const double gain =
                  gl * gl / (hl + kReg) + gr * gr / (hr + kReg) - parent_obj;
              if (gain > best_gain) {
                best_gain = gain;
                best_feature = j;
                best_bin = t;
              }
            }
          }
        }

        if (best_feature < 0) {
          nodes[static_cast<std::size_t>(f.node)].value = -g_total / (h_total + kReg);
          continue;
        }

        any_split = true;
        // Stable partition keeps row order deterministic.
        const auto& bi = binidx[static_cast<std::size_t>(best_feature)];
        int lo = f.begin;
        int hi_scratch = 0;
        for (int r = f.begin; r < f.end; ++r) {
          const int row = rows[static_cast<std::size_t>(r)];
          if (bi[static_cast<std::size_t>(row)] <= best_bin)
            rows[static_cast<std::size_t>(lo++)] = row;
          else
            scratch[static_cast<std::size_t>(hi_scratch++)] = row;
        }
        for (int r = 0; r < hi_scratch; ++r)
          rows[static_cast<std::size_t>(lo + r)] = scratch[static_cast<std::size_t>(r)];

        TreeNode& node = nodes[static_cast<std::size_t>(f.node)];
        node.feature = best_feature;
        node.threshold = edges_[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_bin)];
        node.left = static_cast<int>(nodes.size());
        node.right = node.left + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        const int node_left = node.left, node_right = node.right;
        stack.push_back({node_right, lo, f.end, f.depth + 1});
        stack.push_back({node_left, f.begin, lo, f.depth + 1});
      }

      for (int i = 0; i < n; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        score[ui] += lr_ * tree_value(nodes, x.row(i));
      }
      trees_.push_back(std::move(nodes));
      if (!any_split && round > 0) break;  // nothing left to fit
    }
  }

  double predict_one(const double* x, int) const override {
    double t = base_;
    for (const auto& tree : trees_) t += lr_ * tree_value(tree, x);
    return logit_ ? sigmoid(t) : t;
  }

 private:
  static double tree_value(const std::vector<TreeNode>& nodes, const double* x) {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(k)];
      k = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
  }

  std::vector<std::vector<double>> edges_;
  std::vector<std::vector<TreeNode>> trees_;
  double base_ = 0.0;
  bool logit_;
  double lr_;
};

// Ridge on standardized features, folded back to the raw scale.
std::vector<double> ridge_raw_coefficients(const Matrix& x, const std::vector<double>& y,
                                           double lambda) {
  const int n = x.rows, p = x.cols;
  std::vector<double> center(static_cast<std::size_t>(p), 0.0);
  std::vector<double> scale(static_cast<std::size_t>(p), 1.0);
  Matrix z(n, p);
  for (int j = 0; j < p; ++j) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += x.at(i, j);
    m /= std::max(n, 1);
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += (x.at(i, j) - m) * (x.at(i, j) - m);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    center[static_cast<std::size_t>(j)] = m;
    scale[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
    for (int i = 0; i < n; ++i)
      z.at(i, j) = (x.at(i, j) - m) / scale[static_cast<std::size_t>(j)];
  }
  std::vector<double> b = ols_coefficients(z, y, lambda);
  std::vector<double> raw(static_cast<std::size_t>(p) + 1);
  raw[0] = b[0];
  for (int j = 0; j < p; ++j) {
    raw[static_cast<std::size_t>(j) + 1] = b[static_cast<std::size_t>(j) + 1] / scale[static_cast<std::size_t>(j)];
    raw[0] -= b[static_cast<std::size_t>(j) + 1] * center[static_cast<std::size_t>(j)] / scale[static_cast<std::size_t>(j)];
  }
  return raw;
}

}  // namespace

std::unique_ptr<Model> fit_model(const LearnerSpec& spec, const Matrix& x,
                                 const std::vector<double>& y) {
  if (x.rows <= 0 || x.rows != static_cast<int>(y.size()))
    throw std::invalid_argument("fit_model: design and response sizes disagree");
  switch (spec.kind) {
    case LearnerKind::kMeanOnly: {
      double m = 0.0;
      for (double v : y) m += v;
      return std::make_unique<ConstantModel>(m / y.size());
    }
    case LearnerKind::kInterceptOnlyLogistic: {
      double m = 0.0;
      for (double v : y) m += v;
      return std::make_unique<ConstantModel>(clamp_prob(m / y.size()));
    }
    case LearnerKind::kLinearLeastSquares:
      return std::make_unique<LinearModel>(ols_coefficients(x, y), false);
    case LearnerKind::kRidge:
      return std::make_unique<LinearModel>(ridge_raw_coefficients(x, y, spec.ridge_lambda), false);
    case LearnerKind::kKNearestNeighbors:
      return std::make_unique<KnnModel>(x, y, spec.knn_k);
    case LearnerKind::kLinearLogistic:
      return std::make_unique<LinearModel>(logistic_coefficients(x, y), true);
    case LearnerKind::kBoostedStumps:
      return std::make_unique<BoostedModel>(spec, x, y, false);
    case LearnerKind::kBoostedStumpsLogistic:
      return std::make_unique<BoostedModel>(spec, x, y, true);
  }
  throw std::invalid_argument("fit_model: unknown learner kind");
}

std::vector<LearnerSpec> default_regression_library() {
  return {LearnerSpec::mean_only(), LearnerSpec::linear(), LearnerSpec::ridge(1.0),
          LearnerSpec::knn(10), LearnerSpec::boosted_stumps(200, 0.1, 3)};
}

std::vector<LearnerSpec> default_classification_library() {
  return {LearnerSpec::intercept_logistic(), LearnerSpec::linear_logistic(),
          LearnerSpec::boosted_logistic(200, 0.1, 3)};
}

}  // namespace netshift
