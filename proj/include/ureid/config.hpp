#pragma once

#include "ureid/common.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ureid {

// Flat `key = value` run configuration. Precedence: CLI override > file > default.
// Unknown keys are hard errors so that typos never silently fall back to defaults.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list of integers, e.g. "64,32".
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  // Throws ConfigError naming every key not in `known`.
  void check_known(const std::set<std::string>& known) const;

  // Deterministic rendering (sorted keys) for echoing the resolved config.
  std::string render() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ureid
