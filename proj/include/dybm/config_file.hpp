#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dybm {

// Flat "key = value" text config. '#' starts a comment; blank lines ignored.
// Consumers must call require_consumed() so unknown keys are rejected.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_text(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);

  // Throws ConfigError naming the first key never read by a getter.
  void require_consumed() const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> consumed_;
};

}  // namespace dybm
