#include "hbgeo/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hbgeo/error.hpp"

namespace hbgeo::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::Schema,
              "missing column '" + std::string(name) + "' in " + source.string());
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    fields.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

Table parse(std::string_view text, const std::filesystem::path& source) {
  Table table;
  table.source = source;
  // Strip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    auto raw = text.substr(start, end == std::string_view::npos ? text.npos : end - start);
    ++line_no;
    auto line = trim(raw);
    if (!line.empty() && line.front() != '#') {
      auto fields = split_line(line);
      if (!have_header) {
        table.header = std::move(fields);
        have_header = true;
      } else {
        if (fields.size() != table.header.size()) {
          throw Error(ErrorCode::Schema, source.string() + ":" + std::to_string(line_no) +
                                             ": expected " + std::to_string(table.header.size()) +
                                             " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (!have_header) {
    throw Error(ErrorCode::Schema, "no header line in " + source.string());
  }
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

double parse_real(std::string_view text, std::string_view context) {
  auto s = trim(text);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::Value,
                "cannot parse '" + std::string(text) + "' as a real number (" + std::string(context) + ")");
  }
  return value;
}

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace hbgeo::csv
