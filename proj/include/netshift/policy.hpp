// Modified treatment policies on a continuous exposure: the unit-level maps
// d(a, l; delta), their inverses, and the induced change-of-variables weight
// for weighted-linear summaries.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "netshift/jsonutil.hpp"

namespace netshift {

enum class PolicyKind { kAdditive, kMultiplicative, kPiecewiseAdditive };

// Exposure interval a policy acts on; either side may be infinite.
struct Region {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

// Additive:            d(a) = a + delta
// Multiplicative:      d(a) = delta * a, delta > 0
// Piecewise-additive:  d(a, l) = a + delta * l for a in [region], a otherwise,
//                      where l is a per-unit multiplier (1 when no column is named).
//
// A bounded region whose image collides with the identity branch cannot be
// inverted, so such configurations are rejected: at construction when the
// multiplier is the constant 1, otherwise per row when the policy meets data
// (validate_multiplier), since the collision condition depends on delta * l.
class Policy {
 public:
  static Policy additive(double delta);
  static Policy multiplicative(double delta);
  static Policy piecewise_additive(double delta, Region region,
                                   std::string multiplier_column = "");

  double apply(double a, double multiplier = 1.0) const;
  double inverse(double a, double multiplier = 1.0) const;

  // Checks the piecewise collision condition for one multiplier value.
  void validate_multiplier(double multiplier, int row) const;

  // True when the policy maps every exposure to itself.
  bool is_identity() const;

  PolicyKind kind() const { return kind_; }
  double delta() const { return delta_; }
  const Region& region() const { return region_; }
  const std::string& multiplier_column() const { return multiplier_column_; }

  static Policy from_json(const Json& j);
  Json to_json() const;

 private:
  Policy(PolicyKind kind, double delta, Region region, std::string column);

  PolicyKind kind_;
  double delta_;
  Region region_;
  std::string multiplier_column_;
};

// Coarea weight of the induced policy s o d for a weighted-linear summary:
// 1 for additive and piecewise-additive shifts, 1/delta for multiplicative
// ones, and 1 for units whose summary row is empty (no neighbors and no self
// term), where the summary is constant and the weight is irrelevant but must
// be finite. Every shipped summary kind is weighted-linear, so no rejection
// path exists here.
struct SummarySpec;  // defined in summary.hpp
class Network;       // defined in network.hpp
double induced_weight(const Policy& policy, const SummarySpec& spec, const Network& net, int i);
std::vector<double> induced_weights(const Policy& policy, const SummarySpec& spec,
                                    const Network& net);

}  // namespace netshift
