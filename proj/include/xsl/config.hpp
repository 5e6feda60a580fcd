#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xsl {

// Flat experiment configuration.
//
//   # comment            (also ';')
//   [section]
//   key = value
//
// Keys are addressed as "section.key"; keys before any header live in the
// empty section and are addressed by bare name. Lists are comma separated.
// A key may appear once per section.
class Config {
 public:
  static Config parse(std::istream& in, std::string_view origin = "<config>");
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  /// Sets or overwrites a value (used for command-line overrides).
  void set(std::string_view key, std::string value);

  std::string get(std::string_view key, std::string_view fallback) const;
  std::optional<std::string> find(std::string_view key) const;
  std::string require(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::size_t get_size(std::string_view key, std::size_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Canonical `key = value` lines in sorted key order.
  std::string canonical() const;
  /// FNV-1a over canonical(), as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace xsl
