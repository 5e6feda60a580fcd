#include "xsl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xsl/error.hpp"

namespace xsl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + text + "'");
  return v;
}

}  // namespace

Config Config::parse(std::istream& in, std::string_view origin) {
  Config cfg;
  std::string line, section;
  std::size_t lineno = 0;
  const auto fail = [&](const std::string& msg) {
    throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail("unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    auto key = trim(std::string_view(t).substr(0, eq));
    auto value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) fail("empty key");
    // Trailing comments need whitespace before the marker.
    for (auto marker : {" #", " ;", "\t#", "\t;"})
      if (auto c = value.find(marker); c != std::string::npos) value = trim(value.substr(0, c));
    const auto full = section.empty() ? key : section + "." + key;
    if (!cfg.values_.emplace(full, value).second) fail("duplicate key '" + full + "'");
  }
  return cfg;
}

Config Config::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

bool Config::has(std::string_view key) const { return values_.contains(std::string(key)); }

void Config::set(std::string_view key, std::string value) { values_[std::string(key)] = std::move(value); }

std::optional<std::string> Config::find(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get(std::string_view key, std::string_view fallback) const {
  auto v = find(key);
  return v ? *v : std::string(fallback);
}

std::string Config::require(std::string_view key) const {
  auto v = find(key);
  if (!v) throw ConfigError("missing config key '" + std::string(key) + "'");
  return *v;
}

double Config::get_double(std::string_view key, double fallback) const {
  auto v = find(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t Config::get_int(std::string_view key, std::int64_t fallback) const {
  auto v = find(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::size_t Config::get_size(std::string_view key, std::size_t fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (!v->empty() && v->front() == '-') throw ConfigError("config key '" + std::string(key) + "' must be >= 0");
  return parse_number<std::size_t>(key, *v);
}

std::uint64_t Config::get_u64(std::string_view key, std::uint64_t fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (!v->empty() && v->front() == '-') throw ConfigError("config key '" + std::string(key) + "' must be >= 0");
  return parse_number<std::uint64_t>(key, *v);
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::string> Config::get_list(std::string_view key, std::vector<std::string> fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

}  // namespace xsl
