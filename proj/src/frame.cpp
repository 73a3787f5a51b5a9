#include "netshift/frame.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace netshift {

namespace {

void check_column(const std::vector<double>& col, const std::string& label, int expected_n) {
  if (static_cast<int>(col.size()) != expected_n)
    throw std::invalid_argument("Frame: column '" + label + "' has " +
                                std::to_string(col.size()) + " rows, expected " +
                                std::to_string(expected_n));
  for (std::size_t i = 0; i < col.size(); ++i)
    if (!std::isfinite(col[i]))
      throw std::invalid_argument("Frame: non-finite value at row " + std::to_string(i) +
                                  ", column '" + label + "'");
}

}  // namespace

Frame::Frame(std::vector<std::string> covariate_names,
             std::vector<std::vector<double>> covariates,
             std::vector<double> exposure,
             std::optional<std::vector<double>> outcome)
    : names_(std::move(covariate_names)),
      columns_(std::move(covariates)),
      exposure_(std::move(exposure)),
      outcome_(std::move(outcome)) {
  if (names_.size() != columns_.size())
    throw std::invalid_argument("Frame: covariate names and columns differ in count");
  if (exposure_.empty()) throw std::invalid_argument("Frame: exposure column is empty");
  n_ = static_cast<int>(exposure_.size());

  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw std::invalid_argument("Frame: covariate names must be non-empty");
    if (!seen.insert(name).second)
      throw std::invalid_argument("Frame: duplicate covariate name '" + name + "'");
  }
  check_column(exposure_, "exposure", n_);
  for (std::size_t c = 0; c < columns_.size(); ++c) check_column(columns_[c], names_[c], n_);
  if (outcome_) check_column(*outcome_, "outcome", n_);
}

int Frame::covariate_index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<double>& Frame::covariate(int index) const {
  if (index < 0 || index >= covariate_count())
    throw std::out_of_range("Frame: covariate index " + std::to_string(index) + " out of range");
  return columns_[index];
}

const std::vector<double>& Frame::covariate(std::string_view name) const {
  const int idx = covariate_index(name);
  if (idx < 0) throw std::invalid_argument("Frame: no covariate named '" + std::string(name) + "'");
  return columns_[idx];
}

const std::vector<double>& Frame::outcome() const {
  if (!outcome_) throw std::logic_error("Frame: no outcome column present");
  return *outcome_;
}

Frame load_frame(const std::string& path, const std::string& exposure_column,
                 const std::string& outcome_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_frame: cannot open '" + path + "'");

  const auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t\r");
      if (first == std::string::npos) {
        out.emplace_back();
        continue;
      }
      const auto last = cell.find_last_not_of(" \t\r");
      out.push_back(cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_frame: '" + path + "' is empty");
  const std::vector<std::string> header = split(line);
  if (header.empty()) throw std::runtime_error("load_frame: '" + path + "' has an empty header");
  {
    std::unordered_set<std::string> seen;
    for (const auto& h : header) {
      if (h.empty()) throw std::runtime_error("load_frame: empty column name in header");
      if (!seen.insert(h).second)
        throw std::runtime_error("load_frame: duplicate column '" + h + "' in header");
    }
  }
  int exposure_idx = -1, outcome_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == exposure_column) exposure_idx = static_cast<int>(i);
    if (!outcome_column.empty() && header[i] == outcome_column) outcome_idx = static_cast<int>(i);
  }
  if (exposure_idx < 0)
    throw std::runtime_error("load_frame: exposure column '" + exposure_column +
                             "' not found in '" + path + "'");
  if (!outcome_column.empty() && outcome_idx < 0)
    throw std::runtime_error("load_frame: outcome column '" + outcome_column +
                             "' not found in '" + path + "'");

  std::vector<std::vector<double>> cells(header.size());
  int lineno = 1;
  int rows_parsed = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    // data rows are 1-based and skip blank lines, so name both
    const std::string at = "row " + std::to_string(rows_parsed + 1) + " (line " +
                           std::to_string(lineno) + ")";
    const std::vector<std::string> row = split(line);
    if (row.size() != header.size())
      throw std::runtime_error("load_frame: " + at + " has " + std::to_string(row.size()) +
                               " fields, header has " + std::to_string(header.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].empty())
        throw std::runtime_error("load_frame: missing value at " + at + ", column '" +
                                 header[c] + "'");
      char* end = nullptr;
      const double value = std::strtod(row[c].c_str(), &end);
      if (end == row[c].c_str() || *end != '\0')
        throw std::runtime_error("load_frame: value '" + row[c] + "' at " + at + ", column '" +
                                 header[c] + "' is not a number");
      if (!std::isfinite(value))
        throw std::runtime_error("load_frame: non-finite value at " + at + ", column '" +
                                 header[c] + "'");
      cells[c].push_back(value);
    }
    ++rows_parsed;
  }
  if (cells[0].empty()) throw std::runtime_error("load_frame: '" + path + "' has no data rows");

  std::vector<std::string> names;
  std::vector<std::vector<double>> covariates;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<int>(c) == exposure_idx || static_cast<int>(c) == outcome_idx) continue;
    names.push_back(header[c]);
    covariates.push_back(std::move(cells[c]));
  }
  std::optional<std::vector<double>> outcome;
  if (outcome_idx >= 0) outcome = std::move(cells[outcome_idx]);
  return Frame(std::move(names), std::move(covariates), std::move(cells[exposure_idx]),
               std::move(outcome));
}

void save_frame(const Frame& frame, const std::string& path,
                const std::string& exposure_column, const std::string& outcome_column) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_frame: cannot open '" + path + "' for writing");
  for (const auto& name : frame.covariate_names()) out << name << ',';
  out << exposure_column;
  if (frame.has_outcome()) out << ',' << outcome_column;
  out << '\n';
  char buf[40];
  for (int i = 0; i < frame.n(); ++i) {
    for (int c = 0; c < frame.covariate_count(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.covariate(c)[static_cast<std::size_t>(i)]);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", frame.exposure()[static_cast<std::size_t>(i)]);
    out << buf;
    if (frame.has_outcome()) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.outcome()[static_cast<std::size_t>(i)]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_frame: write to '" + path + "' failed");
}

}  // namespace netshift
