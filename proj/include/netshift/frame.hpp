// Unit-level data: named covariate columns, a continuous exposure, and an
// optional outcome. All columns share one length and must be finite.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netshift {

class Frame {
 public:
  Frame(std::vector<std::string> covariate_names,
        std::vector<std::vector<double>> covariates,
        std::vector<double> exposure,
        std::optional<std::vector<double>> outcome);

  int n() const { return n_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  int covariate_count() const { return static_cast<int>(names_.size()); }

  // Index of a named column, -1 if absent.
  int covariate_index(std::string_view name) const;
  const std::vector<double>& covariate(int index) const;
  const std::vector<double>& covariate(std::string_view name) const;

  const std::vector<double>& exposure() const { return exposure_; }
  bool has_outcome() const { return outcome_.has_value(); }
  const std::vector<double>& outcome() const;

 private:
  int n_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> exposure_;
  std::optional<std::vector<double>> outcome_;
};

// Reads a headered numeric CSV. exposure_column must exist; outcome_column may
// be empty (no outcome). Every other column becomes a covariate. Parse and
// validation errors name the offending line and column.
Frame load_frame(const std::string& path, const std::string& exposure_column,
                 const std::string& outcome_column = "");

// Writes the covariate columns followed by the exposure and (if present) the
// outcome, with round-trippable %.17g values.
void save_frame(const Frame& frame, const std::string& path,
                const std::string& exposure_column = "A",
                const std::string& outcome_column = "Y");

}  // namespace netshift
