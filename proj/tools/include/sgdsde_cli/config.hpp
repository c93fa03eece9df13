#pragma once

// Flat dotted-key configuration files ("noise.sigma2 = 1.0", '#' comments).
// Each command validates the file against its own key allowlist, so typos
// fail loudly instead of silently running defaults.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sgdsde_cli {

class ConfigMap {
 public:
  ConfigMap() = default;

  // Parses `key = value` lines; blank lines and '#' comments are skipped.
  // Throws sgdsde::ConfigError on malformed lines or duplicate keys.
  static ConfigMap load(const std::string& path);

  // Inserts or overwrites one entry (used for command-line flag overrides).
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;

  // Typed getters fall back to the given default when the key is absent and
  // throw sgdsde::ConfigError when the stored text does not parse.
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  // Comma-separated list of doubles.
  std::vector<double> get_double_list(
      const std::string& key, const std::vector<double>& fallback) const;

  // Throws sgdsde::ConfigError naming every key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace sgdsde_cli
