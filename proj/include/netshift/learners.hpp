// Candidate learners for the nuisance regressions: a handful of small models
// with a shared predict interface, fitted from scratch so the artifact has no
// ML dependencies. Regression models return conditional means; classifiers
// return P(label = 1 | x).
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "netshift/jsonutil.hpp"
#include "netshift/stats.hpp"

namespace netshift {

enum class LearnerKind {
  kMeanOnly,
  kLinearLeastSquares,
  kRidge,
  kKNearestNeighbors,
  kBoostedStumps,
  kInterceptOnlyLogistic,
  kLinearLogistic,
  kBoostedStumpsLogistic,
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kMeanOnly;
  double ridge_lambda = 1.0;  // ridge
  int knn_k = 10;             // k-nearest-neighbors
  // boosted stumps (shared by the regression and classification variants)
  int rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 10;
  int bins = 64;

  static LearnerSpec mean_only();
  static LearnerSpec linear();
  static LearnerSpec ridge(double lambda = 1.0);
  static LearnerSpec knn(int k = 10);
  static LearnerSpec boosted_stumps(int rounds = 200, double learning_rate = 0.1,
                                    int max_depth = 3);
  static LearnerSpec intercept_logistic();
  static LearnerSpec linear_logistic();
  static LearnerSpec boosted_logistic(int rounds = 200, double learning_rate = 0.1,
                                      int max_depth = 3);

  bool is_classifier() const;
  std::string name() const;

  static LearnerSpec from_json(const Json& j);
  Json to_json() const;
};

class Model {
 public:
  virtual ~Model() = default;
  // x points at p feature values; p must match the training width.
  virtual double predict_one(const double* x, int p) const = 0;
  std::vector<double> predict(const Matrix& x) const;
};

// Fits the learner to (x, y); for classifiers y must be 0/1 labels. Degenerate
// designs (constant columns, collinearity) degrade gracefully instead of
// throwing.
std::unique_ptr<Model> fit_model(const LearnerSpec& spec, const Matrix& x,
                                 const std::vector<double>& y);

std::vector<LearnerSpec> default_regression_library();
std::vector<LearnerSpec> default_classification_library();

}  // namespace netshift
