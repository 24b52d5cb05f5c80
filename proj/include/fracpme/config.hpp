#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace fracpme {

// INI-style key/value file:
//   # comment          ; comment
//   [section]
//   key = value        values may be quoted; lists are comma separated,
//                      optionally wrapped in [ ]
// Keys are addressed as "section.key". Errors throw ConfigError.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  // "section.key=value", as given on the command line.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  bool has_section(const std::string& section) const;

  // Getters record the value (or default) they return in the resolved view.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& def) const;

  // Every entry must be in `allowed` ("section.key") or live in a section
  // not listed in `sections`. Catches misspelled keys.
  void reject_unknown(const std::set<std::string>& allowed,
                      const std::set<std::string>& sections) const;

  // All entries given plus every default that was read, typed where the
  // text parses as a number, list or bool.
  nlohmann::json resolved() const;

  const std::string& origin() const { return origin_; }

 private:
  std::optional<std::string> raw(const std::string& key) const;
  void record(const std::string& key, const std::string& value) const;

  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> used_;
};

// Parses "1, 2.5, 3" or "[1, 2.5, 3]"; an empty string or "[]" gives {}.
std::vector<double> parse_list(const std::string& text, const std::string& what);
double parse_number(const std::string& text, const std::string& what);

}  // namespace fracpme
