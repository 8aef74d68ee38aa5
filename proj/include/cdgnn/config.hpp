#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdgnn/generators.hpp"

namespace cdgnn {

/// Flat "section.key" settings read from an INI file with sections [model],
/// [data], [train] and [sweep]. Command-line overrides use the same dotted
/// names. Unknown sections or keys are rejected so typos surface early.
class Settings {
 public:
  Settings() = default;

  static Settings from_ini(const std::string& path);
  static Settings parse_ini(const std::string& text);

  /// Sets `section.key`; throws ConfigError for an unknown key.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Every accepted key with a one-line description.
  static const std::vector<std::pair<std::string, std::string>>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cdgnn
