#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace qrh {

/// Flat `key = value` configuration with `#` comments. Keys may be dotted
/// (`mc.outer_paths`). Later duplicates are rejected.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& source = "<string>");
  static KeyValueConfig read_file(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;

  /// Typed accessors; throw ConfigError naming the key on parse failure.
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string source_;
};

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace qrh
