#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chemvise::csv {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

double parse_double(std::string_view cell, std::size_t line, std::string_view what);
long long parse_int(std::string_view cell, std::size_t line, std::string_view what);

std::vector<std::string> split_row(std::string_view line);
std::string trim(std::string_view s);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row, for error messages.
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name) const;
};

Table read_table(const std::filesystem::path& path);
// `source` names the text in error messages.
Table parse_table(std::string_view text, std::string_view source);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace chemvise::csv
