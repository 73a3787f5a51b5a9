// Cross-fitted nuisance estimation: the conditional outcome mean and the
// combined density-ratio weight rho = r*w, both selected from a small
// candidate library by discrete super learning.
#pragma once

#include <cstdint>
#include <vector>

#include "netshift/learners.hpp"
#include "netshift/policy.hpp"
#include "netshift/summary.hpp"

namespace netshift {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index per unit, in {0..k-1}
};

// Uniformly random balanced partition, independent of data and network.
// Requires 2 <= k <= n.
FoldPlan make_folds(int n, int k, uint64_t seed);

// Shrinks the requested fold count to 2 when any fold complement would hold
// fewer than 20 rows.
int choose_fold_count(int n, int requested);

// Instrumentation for the cross-fit purity contract: which rows each fold
// model was trained on, and which fold model produced each unit's prediction.
struct CrossFitAudit {
  std::vector<std::vector<int>> fold_training_rows;
  std::vector<int> producing_fold;  // per unit
  int violations() const;           // units predicted by a model that saw their row
};

struct ConditionalMeanFit {
  std::vector<double> m_natural;  // out-of-fold m_hat at natural features
  std::vector<double> m_shifted;  // out-of-fold m_hat at shifted features
  int selected = -1;              // library index
  std::string selected_name;
  std::vector<double> cv_risk;  // per candidate, cross-validated MSE
  CrossFitAudit audit;
};

// Discrete super learner for m(a_s, l, degree) = E[Y | features]. Features are
// the natural summary, the frame's feature columns, and degree; shifted
// predictions substitute a_s_d for a_s.
ConditionalMeanFit fit_conditional_mean(const SummarizedFrame& sf,
                                        const std::vector<LearnerSpec>& library,
                                        const FoldPlan& folds);

struct DensityRatioFit {
  std::vector<double> rho;          // out-of-fold classifier odds at natural features
  std::vector<double> rho_shifted;  // the same at shifted features
  int selected = -1;                // library index; -1 when the identity short-circuit fired
  std::string selected_name;
  std::vector<double> cv_risk;      // per candidate, cross-validated binary log-loss
  int clip_count = 0;
  double clip_lo = 1e-3;
  double clip_hi = 1e3;
  CrossFitAudit audit;
};

// Density-ratio estimation by probabilistic classification: per fold, the
// complement's natural rows are labeled 0 and its shifted rows 1, candidates
// minimize binary log-loss, and held-out odds p/(1-p) estimate rho = r*w
// directly. Identity policies short-circuit to rho = 1 exactly.
DensityRatioFit fit_density_ratio(const SummarizedFrame& sf, const Policy& policy,
                                  const std::vector<LearnerSpec>& library, const FoldPlan& folds,
                                  double clip_lo = 1e-3, double clip_hi = 1e3);

struct NuisanceFit {
  ConditionalMeanFit m;
  DensityRatioFit r;
};

NuisanceFit fit_nuisances(const SummarizedFrame& sf, const Policy& policy,
                          const std::vector<LearnerSpec>& m_library,
                          const std::vector<LearnerSpec>& r_library, const FoldPlan& folds,
                          double clip_lo = 1e-3, double clip_hi = 1e3);

// Design matrix (a_col | feature columns | degree); a_col is the natural or
// the shifted summary.
Matrix nuisance_features(const SummarizedFrame& sf, const std::vector<double>& a_col);

}  // namespace netshift
