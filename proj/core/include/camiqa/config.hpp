#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace camiqa {

/// Flat "key = value" text config. '#' starts a comment; blank lines are ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Deterministic text form (sorted keys), parseable by parse().
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace camiqa
