// Neighbor summaries of exposures and covariates, their policy-shifted
// counterparts, and the summary-positivity diagnostic.
#pragma once

#include <string>
#include <vector>

#include "netshift/frame.hpp"
#include "netshift/jsonutil.hpp"
#include "netshift/network.hpp"
#include "netshift/policy.hpp"

namespace netshift {

enum class SummaryKind { kNeighborSum, kNeighborWeightedSum, kNeighborMean };

// Defines the per-unit weighted-linear map s_i(x) = sum_j W_ij x_j with
// W_ij != 0 only for neighbors j (plus j = i when include_self).
//   neighbor-sum           W_ij = 1
//   neighbor-weighted-sum  W_ij = edge weight
//   neighbor-mean          W_ij = 1/|row|
// The self weight is 1 before any normalization. normalize rescales each row
// to sum to 1 (a no-op for neighbor-mean).
struct SummarySpec {
  SummaryKind kind = SummaryKind::kNeighborSum;
  bool include_self = false;
  bool normalize = false;
  // Covariates to summarize alongside the exposure; empty means all.
  std::vector<std::string> covariates;

  static SummarySpec from_json(const Json& j);
  Json to_json() const;
};

// Every summary the estimand needs, aligned to node order. Feature columns
// l_names/l_columns hold the raw covariates followed by the summarized ones
// (suffix "_s"); degree is kept separately and appended as a feature by the
// nuisance stage.
struct SummarizedFrame {
  int n = 0;
  std::vector<double> a_s;       // s(A)
  std::vector<double> a_s_d;     // s(d(A)), the induced shift
  std::vector<double> a_s_dinv;  // s(d^-1(A))
  std::vector<int> degree;
  std::vector<std::string> l_names;
  std::vector<std::vector<double>> l_columns;
  std::vector<double> exposure;    // raw A, kept for comparators
  std::vector<double> multiplier;  // per-row policy multiplier (empty unless used)
  bool has_y = false;
  std::vector<double> y;
};

SummarizedFrame summarize(const Frame& frame, const Network& net, const SummarySpec& spec,
                          const Policy& policy);

// Share of units per degree stratum whose shifted summary falls outside the
// observed range of natural summaries in that stratum.
struct PositivityReport {
  struct Stratum {
    int degree = 0;
    int count = 0;
    double share_outside = 0.0;
    bool flagged = false;
  };
  std::vector<Stratum> strata;  // ascending degree, occupied strata only
  double tolerance = 0.0;

  bool any_flagged() const;
  int flagged_count() const;
  Json to_json() const;
};

PositivityReport check_positivity(const SummarizedFrame& sf, double tolerance = 0.05);

}  // namespace netshift
