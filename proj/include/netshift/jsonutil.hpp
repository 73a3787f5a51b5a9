// Strict-key helpers shared by every JSON config surface.
#pragma once

#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace netshift {

using Json = nlohmann::json;

// Error type for malformed configs; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejects keys outside the allowed set so typos fail loudly.
inline void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

inline double require_number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ConfigError(where + ": missing or non-numeric '" + std::string(key) + "'");
  return j.at(key).get<double>();
}

}  // namespace netshift
