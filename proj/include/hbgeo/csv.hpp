#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hbgeo::csv {

/// A comma-delimited table. Lines starting with '#' and blank lines are
/// skipped; CRLF line endings are accepted.
struct Table {
  std::filesystem::path source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to rows

  /// Column index by name; throws a schema error naming the column when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read_file(const std::filesystem::path& path);
Table parse(std::string_view text, const std::filesystem::path& source = {});

std::vector<std::string> split_line(std::string_view line);

/// Strict decimal parse (optional exponent); throws a value error with context.
double parse_real(std::string_view text, std::string_view context);

/// Shortest representation that round-trips to the same double.
std::string format_real(double value);

}  // namespace hbgeo::csv
