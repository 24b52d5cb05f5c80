#include "fracpme/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "fracpme/error.hpp"
#include "fracpme/io.hpp"

namespace fracpme {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

// strips a trailing comment that is not inside quotes
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#' || c == ';') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::optional<bool> parse_bool(const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
  if (l == "false" || l == "no" || l == "off" || l == "0") return false;
  return std::nullopt;
}

std::optional<double> try_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) return std::nullopt;
  return v;
}

nlohmann::json typed(const std::string& v) {
  if (auto d = try_number(v)) {
    if (v.find_first_of(".eEni") == std::string::npos && std::abs(*d) < 9e15)
      return static_cast<long long>(*d);
    return *d;
  }
  if (v == "true" || v == "false") return v == "true";
  if (v.find(',') != std::string::npos || (!v.empty() && v.front() == '[')) {
    try {
      return parse_list(v, "value");
    } catch (const ConfigError&) {
    }
  }
  return v;
}

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
  auto v = try_number(text);
  if (!v) throw ConfigError(what + ": expected a number, got '" + text + "'");
  if (!std::isfinite(*v)) throw ConfigError(what + ": value must be finite");
  return *v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw ConfigError(what + ": unterminated list '" + text + "'");
    t = trim(t.substr(1, t.size() - 2));
  }
  std::vector<double> out;
  if (t.empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), what));
  if (!t.empty() && t.back() == ',') throw ConfigError(what + ": trailing comma");
  return out;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) throw ConfigError(where + ": bad section name '" + section + "'");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw ConfigError(where + ": bad key '" + key + "'");
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section");
    const std::string full = section + "." + key;
    if (c.values_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    c.values_[full] = unquote(trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse(text, path);
}

void Config::set(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), unquote(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& key, const std::string& value) {
  const size_t dot = key.find('.');
  if (dot == std::string::npos || !valid_name(key.substr(0, dot)) ||
      !valid_name(key.substr(dot + 1)))
    throw ConfigError("override key must be section.key, got '" + key + "'");
  values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

bool Config::has_section(const std::string& section) const {
  const std::string pre = section + ".";
  auto it = values_.lower_bound(pre);
  return it != values_.end() && it->first.compare(0, pre.size(), pre) == 0;
}

std::optional<std::string> Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void Config::record(const std::string& key, const std::string& value) const { used_[key] = value; }

std::string Config::get_string(const std::string& key) const {
  auto v = raw(key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  record(key, *v);
  return *v;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  const std::string v = raw(key).value_or(def);
  record(key, v);
  return v;
}

double Config::get_double(const std::string& key) const {
  return parse_number(get_string(key), key);
}

double Config::get_double(const std::string& key, double def) const {
  auto v = raw(key);
  if (!v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, def);
    record(key, std::string(buf, r.ptr));
    return def;
  }
  record(key, *v);
  return parse_number(*v, key);
}

namespace {
int to_int(double d, const std::string& key) {
  if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError(key + ": expected an integer");
  return static_cast<int>(d);
}
}  // namespace

int Config::get_int(const std::string& key) const { return to_int(get_double(key), key); }

int Config::get_int(const std::string& key, int def) const {
  return to_int(get_double(key, def), key);
}

bool Config::get_bool(const std::string& key, bool def) const {
  auto v = raw(key);
  if (!v) {
    record(key, def ? "true" : "false");
    return def;
  }
  auto b = parse_bool(*v);
  if (!b) throw ConfigError(key + ": expected true or false, got '" + *v + "'");
  record(key, *b ? "true" : "false");
  return *b;
}

std::vector<double> Config::get_list(const std::string& key) const {
  return parse_list(get_string(key), key);
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& def) const {
  auto v = raw(key);
  if (!v) {
    std::string s = "[";
    for (size_t i = 0; i < def.size(); ++i) {
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof buf, def[i]);
      s += (i ? ", " : "") + std::string(buf, r.ptr);
    }
    record(key, s + "]");
    return def;
  }
  record(key, *v);
  return parse_list(*v, key);
}

void Config::reject_unknown(const std::set<std::string>& allowed,
                            const std::set<std::string>& sections) const {
  for (const auto& [k, v] : values_) {
    const std::string sec = k.substr(0, k.find('.'));
    if (sections.count(sec) && !allowed.count(k))
      throw ConfigError("unknown key '" + k + "' in " + origin_);
  }
}

nlohmann::json Config::resolved() const {
  nlohmann::json out = nlohmann::json::object();
  auto put = [&](const std::string& k, const std::string& v) {
    const size_t dot = k.find('.');
    out[k.substr(0, dot)][k.substr(dot + 1)] = typed(v);
  };
  for (const auto& [k, v] : values_) put(k, v);
  for (const auto& [k, v] : used_)
    if (!values_.count(k)) put(k, v);
  return out;
}

}  // namespace fracpme
