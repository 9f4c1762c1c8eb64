#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpaforge {

// RFC 4180. Fields with separators, quotes, line breaks or edge spaces are quoted.
std::string csv_escape(std::string_view field);
void append_csv_row(std::string& out, std::span<const std::string> fields);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column(std::string_view name) const;  // throws InvalidArgument
  std::string to_csv() const;
};

// First row is the header; every row must match its width.
Table parse_table(std::string_view text);
Table read_table(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

// Accepts decimal, scientific and 0x-prefixed hex; empty is 0.
std::optional<double> parse_number(std::string_view text);

}  // namespace fpaforge
