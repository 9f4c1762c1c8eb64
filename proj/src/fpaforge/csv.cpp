#include "fpaforge/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fpaforge/error.hpp"

namespace fpaforge {

std::string csv_escape(std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!quote) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void append_csv_row(std::string& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out += "\r\n";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < text.size()) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field.push_back(ch);
      }
      ++i;
      continue;
    }
    if (ch == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      ++i;
    } else if (ch == '\n') {
      end_row();
    } else {
      field.push_back(ch);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) fail(ErrorCode::InvalidArgument, "CSV ends inside a quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
  auto idx = find_column(name);
  if (!idx) fail(ErrorCode::InvalidArgument, fmt::format("no column named '{}'", name));
  return *idx;
}

std::string Table::to_csv() const {
  std::string out;
  append_csv_row(out, columns);
  for (const auto& r : rows) append_csv_row(out, r);
  return out;
}

Table parse_table(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "CSV has no header row");
  Table t;
  t.columns = std::move(rows.front());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != t.columns.size())
      fail(ErrorCode::InvalidArgument,
           fmt::format("CSV row {} has {} fields, header has {}", i, rows[i].size(), t.columns.size()));
    t.rows.push_back(std::move(rows[i]));
  }
  return t;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::Io, fmt::format("write to '{}' failed", path.string()));
}

Table read_table(const std::filesystem::path& path) { return parse_table(read_text_file(path)); }

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return 0.0;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data() + 2, text.data() + text.size(), v, 16);
    if (ec != std::errc{} || p != text.data() + text.size()) return std::nullopt;
    return static_cast<double>(v);
  }
  std::string s(text);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace fpaforge
