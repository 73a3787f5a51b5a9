#include "netshift/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "netshift/rng.hpp"

namespace netshift {

FoldPlan make_folds(int n, int k, uint64_t seed) {
  if (k < 2 || k > n)
    throw std::invalid_argument("make_folds: need 2 <= K <= n, got K=" + std::to_string(k) +
                                ", n=" + std::to_string(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = Rng(seed).substream("folds");
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  FoldPlan plan;
  plan.k = k;
  plan.assignment.resize(static_cast<std::size_t>(n));
  for (int pos = 0; pos < n; ++pos)
    plan.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % k;
  return plan;
}

int choose_fold_count(int n, int requested) {
  const int k = std::max(2, std::min(requested, n));
  // ceil(n/k) is the largest fold, so n - ceil(n/k) is the smallest complement.
  const int largest_fold = (n + k - 1) / k;
  if (n - largest_fold < 20) return 2;
  return k;
}

int CrossFitAudit::violations() const {
  int bad = 0;
  for (std::size_t i = 0; i < producing_fold.size(); ++i) {
    const int f = producing_fold[i];
    if (f < 0) continue;  // no model produced this value (identity short-circuit)
    const auto& rows = fold_training_rows[static_cast<std::size_t>(f)];
    if (std::binary_search(rows.begin(), rows.end(), static_cast<int>(i))) ++bad;
  }
  return bad;
}

Matrix nuisance_features(const SummarizedFrame& sf, const std::vector<double>& a_col) {
  if (static_cast<int>(a_col.size()) != sf.n)
    throw std::invalid_argument("nuisance_features: summary column length mismatch");
  const int p = 1 + static_cast<int>(sf.l_columns.size()) + 1;
  Matrix x(sf.n, p);
  for (int i = 0; i < sf.n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    double* r = x.row(i);
    r[0] = a_col[ui];
    for (std::size_t c = 0; c < sf.l_columns.size(); ++c) r[c + 1] = sf.l_columns[c][ui];
    r[p - 1] = static_cast<double>(sf.degree[ui]);
  }
  return x;
}

namespace {

// Sorted unit ids outside fold f.
std::vector<int> complement_rows(const FoldPlan& folds, int f) {
  std::vector<int> rows;
  rows.reserve(folds.assignment.size());
  for (std::size_t i = 0; i < folds.assignment.size(); ++i)
    if (folds.assignment[i] != f) rows.push_back(static_cast<int>(i));
  return rows;
}

Matrix gather_rows(const Matrix& x, const std::vector<int>& rows) {
  Matrix out(static_cast<int>(rows.size()), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src = x.row(rows[r]);
    std::copy(src, src + x.cols, out.row(static_cast<int>(r)));
  }
  return out;
}

void check_plan(const SummarizedFrame& sf, const FoldPlan& folds) {
  if (static_cast<int>(folds.assignment.size()) != sf.n)
    throw std::invalid_argument("cross-fit: fold plan covers " +
                                std::to_string(folds.assignment.size()) + " units but frame has " +
                                std::to_string(sf.n));
  if (folds.k < 2) throw std::invalid_argument("cross-fit: fold plan has fewer than 2 folds");
}

}  // namespace

ConditionalMeanFit fit_conditional_mean(const SummarizedFrame& sf,
                                        const std::vector<LearnerSpec>& library,
                                        const FoldPlan& folds) {
  if (library.empty()) throw std::invalid_argument("fit_conditional_mean: empty learner library");
  if (!sf.has_y) throw std::invalid_argument("fit_conditional_mean: frame has no outcome");
  for (const auto& spec : library)
    if (spec.is_classifier())
      throw std::invalid_argument("fit_conditional_mean: classifier '" + spec.name() +
                                  "' in a regression library");
  check_plan(sf, folds);

  const Matrix x_nat = nuisance_features(sf, sf.a_s);
  const Matrix x_shift = nuisance_features(sf, sf.a_s_d);
  const std::size_t ncand = library.size();
  const std::size_t un = static_cast<std::size_t>(sf.n);

  std::vector<std::vector<double>> pred_nat(ncand, std::vector<double>(un, 0.0));
  std::vector<std::vector<double>> pred_shift(ncand, std::vector<double>(un, 0.0));

  ConditionalMeanFit fit;
  fit.audit.fold_training_rows.resize(static_cast<std::size_t>(folds.k));
  fit.audit.producing_fold = folds.assignment;

  for (int f = 0; f < folds.k; ++f) {
    const std::vector<int> train = complement_rows(folds, f);
    if (train.empty()) throw std::invalid_argument("fit_conditional_mean: a fold complement is empty");
    fit.audit.fold_training_rows[static_cast<std::size_t>(f)] = train;
    const Matrix x_train = gather_rows(x_nat, train);
    std::vector<double> y_train(train.size());
    for (std::size_t r = 0; r < train.size(); ++r)
      y_train[r] = sf.y[static_cast<std::size_t>(train[r])];

    for (std::size_t c = 0; c < ncand; ++c) {
      const auto model = fit_model(library[c], x_train, y_train);
      for (int i = 0; i < sf.n; ++i) {
        if (folds.assignment[static_cast<std::size_t>(i)] != f) continue;
        pred_nat[c][static_cast<std::size_t>(i)] = model->predict_one(x_nat.row(i), x_nat.cols);
        pred_shift[c][static_cast<std::size_t>(i)] = model->predict_one(x_shift.row(i), x_shift.cols);
      }
    }
  }

  fit.cv_risk.assign(ncand, 0.0);
  for (std::size_t c = 0; c < ncand; ++c) {
    double sse = 0.0;
    for (std::size_t i = 0; i < un; ++i) {
      const double e = sf.y[i] - pred_nat[c][i];
      sse += e * e;
    }
    fit.cv_risk[c] = sse / static_cast<double>(sf.n);
  }
  fit.selected = 0;
  for (std::size_t c = 1; c < ncand; ++c)
    if (fit.cv_risk[c] < fit.cv_risk[static_cast<std::size_t>(fit.selected)])
      fit.selected = static_cast<int>(c);

  fit.selected_name = library[static_cast<std::size_t>(fit.selected)].name();
  fit.m_natural = std::move(pred_nat[static_cast<std::size_t>(fit.selected)]);
  fit.m_shifted = std::move(pred_shift[static_cast<std::size_t>(fit.selected)]);
  for (std::size_t i = 0; i < un; ++i)
    if (!std::isfinite(fit.m_natural[i]) || !std::isfinite(fit.m_shifted[i]))
      throw std::runtime_error("fit_conditional_mean: non-finite prediction at unit " +
                               std::to_string(i));
  return fit;
}

DensityRatioFit fit_density_ratio(const SummarizedFrame& sf, const Policy& policy,
                                  const std::vector<LearnerSpec>& library, const FoldPlan& folds,
                                  double clip_lo, double clip_hi) {
  if (!(clip_lo > 0.0) || !(clip_hi > clip_lo))
    throw std::invalid_argument("fit_density_ratio: need 0 < clip_lo < clip_hi");
  check_plan(sf, folds);
  const std::size_t un = static_cast<std::size_t>(sf.n);

  DensityRatioFit fit;
  fit.clip_lo = clip_lo;
  fit.clip_hi = clip_hi;
  fit.audit.fold_training_rows.resize(static_cast<std::size_t>(folds.k));
  fit.audit.producing_fold.assign(un, -1);

  if (policy.is_identity()) {
    // d is the identity, so the shifted and natural laws coincide and
    // rho = r*w = 1 exactly; nothing is estimated.
    fit.rho.assign(un, 1.0);
    fit.rho_shifted.assign(un, 1.0);
    fit.selected_name = "identity";
    return fit;
  }

  if (library.empty()) throw std::invalid_argument("fit_density_ratio: empty learner library");
  for (const auto& spec : library)
    if (!spec.is_classifier())
      throw std::invalid_argument("fit_density_ratio: regression learner '" + spec.name() +
                                  "' in a classifier library");

  const Matrix x_nat = nuisance_features(sf, sf.a_s);
  const Matrix x_shift = nuisance_features(sf, sf.a_s_d);
  const std::size_t ncand = library.size();

  std::vector<std::vector<double>> p_nat(ncand, std::vector<double>(un, 0.0));
  std::vector<std::vector<double>> p_shift(ncand, std::vector<double>(un, 0.0));
  fit.audit.producing_fold = folds.assignment;

  for (int f = 0; f < folds.k; ++f) {
    const std::vector<int> train = complement_rows(folds, f);
    if (train.empty()) throw std::invalid_argument("fit_density_ratio: a fold complement is empty");
    fit.audit.fold_training_rows[static_cast<std::size_t>(f)] = train;

    // 2m-row classification set: natural rows labeled 0, shifted rows 1.
    const int m = static_cast<int>(train.size());
    Matrix x_train(2 * m, x_nat.cols);
    std::vector<double> label(static_cast<std::size_t>(2 * m), 0.0);
    for (int r = 0; r < m; ++r) {
      const double* src = x_nat.row(train[static_cast<std::size_t>(r)]);
      std::copy(src, src + x_nat.cols, x_train.row(r));
    }
    for (int r = 0; r < m; ++r) {
      const double* src = x_shift.row(train[static_cast<std::size_t>(r)]);
      std::copy(src, src + x_shift.cols, x_train.row(m + r));
      label[static_cast<std::size_t>(m + r)] = 1.0;
    }

    for (std::size_t c = 0; c < ncand; ++c) {
      const auto model = fit_model(library[c], x_train, label);
      for (int i = 0; i < sf.n; ++i) {
        if (folds.assignment[static_cast<std::size_t>(i)] != f) continue;
        p_nat[c][static_cast<std::size_t>(i)] = model->predict_one(x_nat.row(i), x_nat.cols);
        p_shift[c][static_cast<std::size_t>(i)] = model->predict_one(x_shift.row(i), x_shift.cols);
      }
    }
  }

  // Cross-validated log-loss over both labeled rows of each held-out unit.
  fit.cv_risk.assign(ncand, 0.0);
  constexpr double kFloor = 1e-12;
  for (std::size_t c = 0; c < ncand; ++c) {
    double loss = 0.0;
    for (std::size_t i = 0; i < un; ++i) {
      loss -= std::log(std::max(kFloor, 1.0 - p_nat[c][i]));
      loss -= std::log(std::max(kFloor, p_shift[c][i]));
    }
    fit.cv_risk[c] = loss / static_cast<double>(2 * sf.n);
  }
  fit.selected = 0;
  for (std::size_t c = 1; c < ncand; ++c)
    if (fit.cv_risk[c] < fit.cv_risk[static_cast<std::size_t>(fit.selected)])
      fit.selected = static_cast<int>(c);

  fit.selected_name = library[static_cast<std::size_t>(fit.selected)].name();
  const std::size_t w = static_cast<std::size_t>(fit.selected);
  fit.rho.resize(un);
  fit.rho_shifted.resize(un);
  auto odds = [&](double p) {
    double r = p >= 1.0 ? std::numeric_limits<double>::infinity() : p / (1.0 - p);
    if (r < clip_lo || r > clip_hi || !std::isfinite(r)) {
      ++fit.clip_count;
      r = std::min(clip_hi, std::max(clip_lo, std::isfinite(r) ? r : clip_hi));
    }
    return r;
  };
  for (std::size_t i = 0; i < un; ++i) {
    fit.rho[i] = odds(p_nat[w][i]);
    fit.rho_shifted[i] = odds(p_shift[w][i]);
  }
  return fit;
}

NuisanceFit fit_nuisances(const SummarizedFrame& sf, const Policy& policy,
                          const std::vector<LearnerSpec>& m_library,
                          const std::vector<LearnerSpec>& r_library, const FoldPlan& folds,
                          double clip_lo, double clip_hi) {
  NuisanceFit nf;
  nf.m = fit_conditional_mean(sf, m_library, folds);
  nf.r = fit_density_ratio(sf, policy, r_library, folds, clip_lo, clip_hi);
  return nf;
}

}  // namespace netshift
