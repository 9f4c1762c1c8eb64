#include "fpaforge/kv_config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fpaforge/error.hpp"

namespace fpaforge {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Reads one scalar starting at `at`; stops at `,` or `]` when inside a list.
std::string read_scalar(std::string_view s, std::size_t& at, bool in_list, std::string_view where) {
  while (at < s.size() && std::isspace(static_cast<unsigned char>(s[at]))) ++at;
  if (at < s.size() && s[at] == '"') {
    std::string out;
    ++at;
    while (true) {
      if (at >= s.size()) fail(ErrorCode::ConfigError, fmt::format("{}: unterminated string", where));
      char ch = s[at++];
      if (ch == '"') break;
      if (ch != '\\') {
        out.push_back(ch);
        continue;
      }
      if (at >= s.size()) fail(ErrorCode::ConfigError, fmt::format("{}: dangling escape", where));
      char esc = s[at++];
      switch (esc) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        case '"': out.push_back('"'); break;
        case 'x': {
          if (at + 2 > s.size()) fail(ErrorCode::ConfigError, fmt::format("{}: short \\x escape", where));
          unsigned v = 0;
          auto [p, ec] = std::from_chars(s.data() + at, s.data() + at + 2, v, 16);
          if (ec != std::errc{} || p != s.data() + at + 2)
            fail(ErrorCode::ConfigError, fmt::format("{}: bad \\x escape", where));
          out.push_back(static_cast<char>(v));
          at += 2;
          break;
        }
        default: fail(ErrorCode::ConfigError, fmt::format("{}: unknown escape \\{}", where, esc));
      }
    }
    return out;
  }
  std::size_t start = at;
  while (at < s.size() && !(in_list && (s[at] == ',' || s[at] == ']')) && s[at] != '#') ++at;
  return std::string(trim(s.substr(start, at - start)));
}

KvConfig::Value parse_value(std::string_view raw, std::string_view where) {
  KvConfig::Value v;
  std::string_view s = trim(raw);
  std::size_t at = 0;
  if (!s.empty() && s[0] == '[') {
    v.is_list = true;
    at = 1;
    while (true) {
      while (at < s.size() && std::isspace(static_cast<unsigned char>(s[at]))) ++at;
      if (at >= s.size()) fail(ErrorCode::ConfigError, fmt::format("{}: unterminated list", where));
      if (s[at] == ']') {
        ++at;
        break;
      }
      v.items.push_back(read_scalar(s, at, true, where));
      while (at < s.size() && std::isspace(static_cast<unsigned char>(s[at]))) ++at;
      if (at < s.size() && s[at] == ',') ++at;
    }
  } else {
    v.items.push_back(read_scalar(s, at, false, where));
  }
  while (at < s.size() && std::isspace(static_cast<unsigned char>(s[at]))) ++at;
  if (at < s.size() && s[at] != '#') fail(ErrorCode::ConfigError, fmt::format("{}: trailing text after value", where));
  return v;
}

}  // namespace

std::int64_t parse_int(std::string_view text, std::string_view what) {
  std::string_view t = trim(text);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size())
    fail(ErrorCode::ConfigError, fmt::format("{}: '{}' is not an integer", what, text));
  return v;
}

double parse_double(std::string_view text, std::string_view what) {
  std::string t(trim(text));
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    fail(ErrorCode::ConfigError, fmt::format("{}: '{}' is not a number", what, text));
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  std::string_view t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(ErrorCode::ConfigError, fmt::format("{}: '{}' is not a boolean", what, text));
}

KvConfig KvConfig::parse(std::string_view text, std::string_view origin) {
  KvConfig cfg;
  cfg.origin_ = std::string(origin);
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = fmt::format("{}:{}", origin, line_no);
    std::string_view l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    if (l[0] == '[') {
      if (l.back() != ']') fail(ErrorCode::ConfigError, fmt::format("{}: bad section header", where));
      section = std::string(trim(l.substr(1, l.size() - 2)));
      continue;
    }
    auto eq = l.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::ConfigError, fmt::format("{}: expected key = value", where));
    std::string key(trim(l.substr(0, eq)));
    if (key.empty()) fail(ErrorCode::ConfigError, fmt::format("{}: empty key", where));
    if (!section.empty()) key = section + "." + key;
    if (cfg.values_.count(key)) fail(ErrorCode::ConfigError, fmt::format("{}: duplicate key '{}'", where, key));
    cfg.values_[key] = parse_value(l.substr(eq + 1), where);
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KvConfig::set(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    fail(ErrorCode::ConfigError, fmt::format("override '{}' is not key=value", assignment));
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void KvConfig::set(std::string_view key, std::string_view raw_value) {
  values_[std::string(trim(key))] = parse_value(raw_value, fmt::format("override {}", key));
}

bool KvConfig::has(std::string_view key) const { return find(key) != nullptr; }

std::vector<std::string> KvConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : values_) out.push_back(k);
  return out;
}

void KvConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [k, _] : values_)
    if (!known.count(k)) fail(ErrorCode::ConfigError, fmt::format("{}: unknown key '{}'", origin_, k));
}

const KvConfig::Value* KvConfig::find(std::string_view key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::optional<std::string> KvConfig::find_string(std::string_view key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->is_list) fail(ErrorCode::ConfigError, fmt::format("'{}' must be a scalar", key));
  return v->items.front();
}

std::string KvConfig::get_string(std::string_view key, std::string_view fallback) const {
  auto v = find_string(key);
  return v ? *v : std::string(fallback);
}

std::int64_t KvConfig::get_int(std::string_view key, std::int64_t fallback) const {
  auto v = find_string(key);
  return v ? parse_int(*v, key) : fallback;
}

double KvConfig::get_double(std::string_view key, double fallback) const {
  auto v = find_string(key);
  return v ? parse_double(*v, key) : fallback;
}

bool KvConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = find_string(key);
  return v ? parse_bool(*v, key) : fallback;
}

std::vector<std::string> KvConfig::get_list(std::string_view key, std::vector<std::string> fallback) const {
  const Value* v = find(key);
  return v ? v->items : fallback;
}

std::vector<std::int64_t> KvConfig::get_int_list(std::string_view key, std::vector<std::int64_t> fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& item : v->items) out.push_back(parse_int(item, key));
  return out;
}

std::vector<double> KvConfig::get_double_list(std::string_view key, std::vector<double> fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : v->items) out.push_back(parse_double(item, key));
  return out;
}

KvConfig KvConfig::subset(std::initializer_list<std::string_view> prefixes) const {
  KvConfig out;
  out.origin_ = origin_;
  for (const auto& [k, v] : values_)
    for (auto p : prefixes)
      if (std::string_view(k).substr(0, p.size()) == p) {
        out.values_.emplace(k, v);
        break;
      }
  return out;
}

}  // namespace fpaforge
