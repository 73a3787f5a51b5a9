#include "netshift/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "netshift/network.hpp"
#include "netshift/summary.hpp"

namespace netshift {

namespace {

// Collision between the shifted image of [lower, upper] and the identity
// branch: a positive shift needs an unbounded upper edge, a negative one an
// unbounded lower edge.
bool region_shift_ambiguous(const Region& r, double shift) {
  if (shift > 0.0) return std::isfinite(r.upper);
  if (shift < 0.0) return std::isfinite(r.lower);
  return false;
}

}  // namespace

Policy::Policy(PolicyKind kind, double delta, Region region, std::string column)
    : kind_(kind), delta_(delta), region_(region), multiplier_column_(std::move(column)) {}

Policy Policy::additive(double delta) {
  if (!std::isfinite(delta)) throw std::invalid_argument("Policy: additive delta must be finite");
  return Policy(PolicyKind::kAdditive, delta, Region{}, "");
}

Policy Policy::multiplicative(double delta) {
  if (!std::isfinite(delta) || delta <= 0.0)
    throw std::invalid_argument("Policy: multiplicative delta must be finite and > 0");
  return Policy(PolicyKind::kMultiplicative, delta, Region{}, "");
}

Policy Policy::piecewise_additive(double delta, Region region, std::string multiplier_column) {
  if (!std::isfinite(delta)) throw std::invalid_argument("Policy: piecewise delta must be finite");
  if (std::isnan(region.lower) || std::isnan(region.upper) || !(region.lower < region.upper))
    throw std::invalid_argument("Policy: piecewise region needs lower < upper");
  Policy p(PolicyKind::kPiecewiseAdditive, delta, region, std::move(multiplier_column));
  // Without a multiplier column the shift is exactly delta; the collision
  // check can run now instead of waiting for data.
  if (p.multiplier_column_.empty() && region_shift_ambiguous(region, delta))
    throw std::invalid_argument(
        "Policy: ambiguous piecewise image overlap; shifting a region against a finite "
        "boundary makes the map non-invertible");
  return p;
}

double Policy::apply(double a, double multiplier) const {
  switch (kind_) {
    case PolicyKind::kAdditive:
      return a + delta_;
    case PolicyKind::kMultiplicative:
      return delta_ * a;
    case PolicyKind::kPiecewiseAdditive:
      return (a >= region_.lower && a <= region_.upper) ? a + delta_ * multiplier : a;
  }
  return a;
}

double Policy::inverse(double a, double multiplier) const {
  switch (kind_) {
    case PolicyKind::kAdditive:
      return a - delta_;
    case PolicyKind::kMultiplicative:
      return a / delta_;
    case PolicyKind::kPiecewiseAdditive: {
      const double shift = delta_ * multiplier;
      // Inverse on the image of the shifted region, identity elsewhere.
      return (a >= region_.lower + shift && a <= region_.upper + shift) ? a - shift : a;
    }
  }
  return a;
}

void Policy::validate_multiplier(double multiplier, int row) const {
  if (kind_ != PolicyKind::kPiecewiseAdditive) return;
  if (!std::isfinite(multiplier))
    throw std::runtime_error("Policy: non-finite multiplier at row " + std::to_string(row));
  if (region_shift_ambiguous(region_, delta_ * multiplier))
    throw std::runtime_error(
        "Policy: ambiguous piecewise image overlap at row " + std::to_string(row) +
        " (shift " + std::to_string(delta_ * multiplier) + " against a finite region boundary)");
}

bool Policy::is_identity() const {
  switch (kind_) {
    case PolicyKind::kAdditive:
      return delta_ == 0.0;
    case PolicyKind::kMultiplicative:
      return delta_ == 1.0;
    case PolicyKind::kPiecewiseAdditive:
      return delta_ == 0.0;
  }
  return false;
}

Policy Policy::from_json(const Json& j) {
  require_keys(j, {"kind", "delta", "region", "multiplier_column"}, "policy");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("policy: missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  const double delta = require_number(j, "delta", "policy");
  try {
    if (kind == "additive") return additive(delta);
    if (kind == "multiplicative") return multiplicative(delta);
    if (kind == "piecewise_additive") {
      Region region;
      if (j.contains("region")) {
        const Json& r = j.at("region");
        require_keys(r, {"lower", "upper"}, "policy.region");
        if (r.contains("lower") && !r.at("lower").is_null())
          region.lower = r.at("lower").get<double>();
        if (r.contains("upper") && !r.at("upper").is_null())
          region.upper = r.at("upper").get<double>();
      }
      std::string column;
      if (j.contains("multiplier_column")) column = j.at("multiplier_column").get<std::string>();
      return piecewise_additive(delta, region, std::move(column));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("policy: unknown kind '" + kind + "'");
}

Json Policy::to_json() const {
  Json j;
  switch (kind_) {
    case PolicyKind::kAdditive:
      j["kind"] = "additive";
      break;
    case PolicyKind::kMultiplicative:
      j["kind"] = "multiplicative";
      break;
    case PolicyKind::kPiecewiseAdditive:
      j["kind"] = "piecewise_additive";
      break;
  }
  j["delta"] = delta_;
  if (kind_ == PolicyKind::kPiecewiseAdditive) {
    j["region"]["lower"] = std::isfinite(region_.lower) ? Json(region_.lower) : Json(nullptr);
    j["region"]["upper"] = std::isfinite(region_.upper) ? Json(region_.upper) : Json(nullptr);
    if (!multiplier_column_.empty()) j["multiplier_column"] = multiplier_column_;
  }
  return j;
}

double induced_weight(const Policy& policy, const SummarySpec& spec, const Network& net, int i) {
  // All supported summaries are weighted-linear maps, for which the coarea
  // factor of s o d reduces to the slope of d: 1 for unit-slope policies and
  // 1/delta for multiplicative ones. A unit whose summary row is empty has a
  // degenerate (constant) summary; its weight is 1 by convention.
  if (i < 0 || i >= net.size()) throw std::out_of_range("induced_weight: node index out of range");
  const bool empty_row = net.degree(i) == 0 && !spec.include_self;
  if (empty_row) return 1.0;
  if (policy.kind() == PolicyKind::kMultiplicative) return 1.0 / policy.delta();
  return 1.0;
}

std::vector<double> induced_weights(const Policy& policy, const SummarySpec& spec,
                                    const Network& net) {
  std::vector<double> w(static_cast<std::size_t>(net.size()));
  for (int i = 0; i < net.size(); ++i) w[static_cast<std::size_t>(i)] = induced_weight(policy, spec, net, i);
  return w;
}

}  // namespace netshift
