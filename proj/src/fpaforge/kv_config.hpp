#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fpaforge {

// Line-oriented `key = value` files with `[section]` headers, `#` comments,
// double-quoted strings and one-line `[a, b, c]` lists. Keys inside a section
// are stored as `section.key`.
class KvConfig {
 public:
  struct Value {
    std::vector<std::string> items;
    bool is_list = false;
  };

  static KvConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KvConfig load(const std::filesystem::path& path);

  // Applies `key=value` using the same value grammar as the file.
  void set(std::string_view assignment);
  void set(std::string_view key, std::string_view raw_value);

  bool has(std::string_view key) const;
  std::vector<std::string> keys() const;
  // Keys starting with any of `prefixes`.
  KvConfig subset(std::initializer_list<std::string_view> prefixes) const;
  // Throws ConfigError naming the first key not in `known`.
  void require_known(const std::set<std::string>& known) const;

  std::string get_string(std::string_view key, std::string_view fallback) const;
  std::optional<std::string> find_string(std::string_view key) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback = {}) const;
  std::vector<std::int64_t> get_int_list(std::string_view key, std::vector<std::int64_t> fallback = {}) const;
  std::vector<double> get_double_list(std::string_view key, std::vector<double> fallback = {}) const;

 private:
  const Value* find(std::string_view key) const;
  std::map<std::string, Value, std::less<>> values_;
  std::string origin_;
};

std::int64_t parse_int(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

}  // namespace fpaforge
