#include "sgdsde_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sgdsde/errors.hpp"

namespace sgdsde_cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return s.substr(b, e - b);
}

bool valid_key(const std::string& key) {
  if (key.empty()) {
    return false;
  }
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') {
      return false;
    }
  }
  return true;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw sgdsde::ConfigError("config key '" + key + "' has non-numeric value '" +
                              text + "'");
  }
  if (pos != text.size()) {
    throw sgdsde::ConfigError("config key '" + key +
                              "' has trailing characters in value '" + text +
                              "'");
  }
  return v;
}

}  // namespace

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw sgdsde::ConfigError("cannot open config file: " + path);
  }
  ConfigMap cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) {
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw sgdsde::ConfigError("config line " + std::to_string(line_no) +
                                " has no '=': " + stripped);
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (!valid_key(key)) {
      throw sgdsde::ConfigError("config line " + std::to_string(line_no) +
                                " has invalid key '" + key + "'");
    }
    if (cfg.entries_.count(key) != 0) {
      throw sgdsde::ConfigError("config key '" + key + "' appears twice");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool ConfigMap::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return fallback;
  }
  return parse_double(key, it->second);
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return fallback;
  }
  const double v = parse_double(key, it->second);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw sgdsde::ConfigError("config key '" + key +
                              "' must be an integer, got '" + it->second + "'");
  }
  return i;
}

std::uint64_t ConfigMap::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return fallback;
  }
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) {
      throw std::invalid_argument("trailing");
    }
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw sgdsde::ConfigError("config key '" + key +
                              "' must be a nonnegative integer, got '" +
                              it->second + "'");
  }
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::vector<double> ConfigMap::get_double_list(
    const std::string& key, const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return fallback;
  }
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) {
      throw sgdsde::ConfigError("config key '" + key +
                                "' has an empty list element");
    }
    out.push_back(parse_double(key, t));
  }
  if (out.empty()) {
    throw sgdsde::ConfigError("config key '" + key + "' has an empty list");
  }
  return out;
}

void ConfigMap::require_known(const std::vector<std::string>& allowed) const {
  std::string offenders;
  for (const auto& [key, value] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      if (!offenders.empty()) {
        offenders += ", ";
      }
      offenders += key;
    }
  }
  if (!offenders.empty()) {
    throw sgdsde::ConfigError("unknown config keys: " + offenders);
  }
}

}  // namespace sgdsde_cli
