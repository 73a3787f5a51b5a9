#include "netshift/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace netshift {

namespace {

std::string kind_name(SummaryKind k) {
  switch (k) {
    case SummaryKind::kNeighborSum: return "neighbor-sum";
    case SummaryKind::kNeighborWeightedSum: return "neighbor-weighted-sum";
    case SummaryKind::kNeighborMean: return "neighbor-mean";
  }
  return "?";
}

}  // namespace

SummarySpec SummarySpec::from_json(const Json& j) {
  require_keys(j, {"kind", "include_self", "normalize", "covariates"}, "summary");
  SummarySpec spec;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw ConfigError("summary: 'kind' must be a string");
    const std::string k = j.at("kind").get<std::string>();
    if (k == "neighbor-sum") spec.kind = SummaryKind::kNeighborSum;
    else if (k == "neighbor-weighted-sum") spec.kind = SummaryKind::kNeighborWeightedSum;
    else if (k == "neighbor-mean") spec.kind = SummaryKind::kNeighborMean;
    else throw ConfigError("summary: unknown kind '" + k + "'");
  }
  if (j.contains("include_self")) {
    if (!j.at("include_self").is_boolean()) throw ConfigError("summary: 'include_self' must be a boolean");
    spec.include_self = j.at("include_self").get<bool>();
  }
  if (j.contains("normalize")) {
    if (!j.at("normalize").is_boolean()) throw ConfigError("summary: 'normalize' must be a boolean");
    spec.normalize = j.at("normalize").get<bool>();
  }
  if (j.contains("covariates")) {
    if (!j.at("covariates").is_array()) throw ConfigError("summary: 'covariates' must be an array");
    for (const auto& item : j.at("covariates")) {
      if (!item.is_string()) throw ConfigError("summary: 'covariates' entries must be strings");
      spec.covariates.push_back(item.get<std::string>());
    }
  }
  return spec;
}

Json SummarySpec::to_json() const {
  Json j;
  j["kind"] = kind_name(kind);
  j["include_self"] = include_self;
  j["normalize"] = normalize;
  j["covariates"] = covariates;
  return j;
}

SummarizedFrame summarize(const Frame& frame, const Network& net, const SummarySpec& spec,
                          const Policy& policy) {
  const int n = frame.n();
  if (n != net.size())
    throw std::invalid_argument("summarize: frame has " + std::to_string(n) + " rows but network has " +
                                std::to_string(net.size()) + " nodes");

  SummarizedFrame sf;
  sf.n = n;
  sf.exposure = std::vector<double>(frame.exposure().begin(), frame.exposure().end());
  sf.has_y = frame.has_outcome();
  if (sf.has_y) sf.y = std::vector<double>(frame.outcome().begin(), frame.outcome().end());

  // Per-row policy multiplier, from the named column or the constant 1.
  // Piecewise invertibility depends on delta * multiplier, so each distinct
  // value is checked where it enters.
  std::vector<double> mult(static_cast<std::size_t>(n), 1.0);
  if (policy.kind() == PolicyKind::kPiecewiseAdditive) {
    if (!policy.multiplier_column().empty()) {
      const int c = frame.covariate_index(policy.multiplier_column());
      if (c < 0)
        throw std::invalid_argument("summarize: multiplier column '" + policy.multiplier_column() +
                                    "' not found in frame");
      const auto col = frame.covariate(c);
      std::copy(col.begin(), col.end(), mult.begin());
      for (int i = 0; i < n; ++i) policy.validate_multiplier(mult[static_cast<std::size_t>(i)], i);
    }
    sf.multiplier = mult;
  }

  // Shifted and inverse-shifted exposures, once per unit.
  std::vector<double> a_d(static_cast<std::size_t>(n));
  std::vector<double> a_dinv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    a_d[ui] = policy.apply(sf.exposure[ui], mult[ui]);
    a_dinv[ui] = policy.inverse(sf.exposure[ui], mult[ui]);
  }

  sf.degree.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sf.degree[static_cast<std::size_t>(i)] = net.degree(i);

  // Weight row for unit i as (index, weight) pairs; shared by the exposure
  // and covariate summaries.
  std::vector<std::pair<int, double>> row;
  auto build_row = [&](int i) {
    row.clear();
    for (const auto& [j, w] : net.neighbors(i))
      row.emplace_back(j, spec.kind == SummaryKind::kNeighborWeightedSum ? w : 1.0);
    if (spec.include_self) row.emplace_back(i, 1.0);
    if (spec.kind == SummaryKind::kNeighborMean && !row.empty()) {
      const double inv = 1.0 / static_cast<double>(row.size());
      for (auto& e : row) e.second = inv;
    }
    if (spec.normalize && !row.empty()) {
      double total = 0.0;
      for (const auto& e : row) total += e.second;
      if (total > 0.0)
        for (auto& e : row) e.second /= total;
    }
  };

  auto summarize_vector = [&](const auto& x) {
    double s = 0.0;
    for (const auto& [j, w] : row) s += w * x[static_cast<std::size_t>(j)];
    return s;
  };

  // Which covariates get a summarized companion column; empty list means all.
  std::vector<int> summarized;
  if (spec.covariates.empty()) {
    summarized.resize(static_cast<std::size_t>(frame.covariate_count()));
    for (int c = 0; c < frame.covariate_count(); ++c) summarized[static_cast<std::size_t>(c)] = c;
  } else {
    for (const auto& name : spec.covariates) {
      const int c = frame.covariate_index(name);
      if (c < 0)
        throw std::invalid_argument("summarize: covariate '" + name + "' not found in frame");
      summarized.push_back(c);
    }
  }

  for (int c = 0; c < frame.covariate_count(); ++c) {
    sf.l_names.push_back(frame.covariate_names()[static_cast<std::size_t>(c)]);
    const auto col = frame.covariate(c);
    sf.l_columns.emplace_back(col.begin(), col.end());
  }
  for (int c : summarized) {
    sf.l_names.push_back(frame.covariate_names()[static_cast<std::size_t>(c)] + "_s");
    sf.l_columns.emplace_back(static_cast<std::size_t>(n), 0.0);
  }

  sf.a_s.resize(static_cast<std::size_t>(n));
  sf.a_s_d.resize(static_cast<std::size_t>(n));
  sf.a_s_dinv.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    build_row(i);
    const std::size_t ui = static_cast<std::size_t>(i);
    sf.a_s[ui] = summarize_vector(frame.exposure());
    sf.a_s_d[ui] = summarize_vector(a_d);
    sf.a_s_dinv[ui] = summarize_vector(a_dinv);
    for (std::size_t k = 0; k < summarized.size(); ++k) {
      const auto col = frame.covariate(summarized[k]);
      sf.l_columns[static_cast<std::size_t>(frame.covariate_count()) + k][ui] = summarize_vector(col);
    }
  }
  return sf;
}

bool PositivityReport::any_flagged() const {
  for (const auto& s : strata)
    if (s.flagged) return true;
  return false;
}

int PositivityReport::flagged_count() const {
  int c = 0;
  for (const auto& s : strata) c += s.flagged ? 1 : 0;
  return c;
}

Json PositivityReport::to_json() const {
  Json arr = Json::array();
  for (const auto& s : strata) {
    Json row;
    row["degree"] = s.degree;
    row["count"] = s.count;
    row["share_outside"] = s.share_outside;
    row["flagged"] = s.flagged;
    arr.push_back(row);
  }
  Json j;
  j["tolerance"] = tolerance;
  j["strata"] = arr;
  j["flagged_count"] = flagged_count();
  return j;
}

PositivityReport check_positivity(const SummarizedFrame& sf, double tolerance) {
  if (!(tolerance >= 0.0) || !(tolerance <= 1.0))
    throw std::invalid_argument("check_positivity: tolerance must lie in [0, 1]");
  // Range of natural summaries per occupied degree stratum.
  std::map<int, std::pair<double, double>> range;
  for (int i = 0; i < sf.n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    auto [it, fresh] = range.try_emplace(sf.degree[ui], sf.a_s[ui], sf.a_s[ui]);
    if (!fresh) {
      it->second.first = std::min(it->second.first, sf.a_s[ui]);
      it->second.second = std::max(it->second.second, sf.a_s[ui]);
    }
  }
  std::map<int, std::pair<int, int>> outside_over_count;
  for (int i = 0; i < sf.n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    const auto& [lo, hi] = range.at(sf.degree[ui]);
    auto& [out, cnt] = outside_over_count[sf.degree[ui]];
    ++cnt;
    if (sf.a_s_d[ui] < lo || sf.a_s_d[ui] > hi) ++out;
  }
  PositivityReport report;
  report.tolerance = tolerance;
  for (const auto& [deg, oc] : outside_over_count) {
    PositivityReport::Stratum s;
    s.degree = deg;
    s.count = oc.second;
    s.share_outside = static_cast<double>(oc.first) / static_cast<double>(oc.second);
    s.flagged = s.share_outside > tolerance;
    report.strata.push_back(s);
  }
  return report;
}

}  // namespace netshift
