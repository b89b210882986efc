#include "appeval/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "appeval/error.hpp"

namespace appeval::csv {
namespace {

// Splits one logical record. Quoted fields may contain commas and doubled quotes;
// embedded newlines are not supported.
std::vector<std::string> split_record(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw DataError(where + ": unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

Table::Table(std::string source, std::vector<std::string> header,
             std::vector<std::vector<std::string>> rows, std::vector<std::size_t> lines)
    : source_(std::move(source)),
      header_(std::move(header)),
      rows_(std::move(rows)),
      lines_(std::move(lines)) {}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header_)
    if (h == name) return true;
  return false;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  throw DataError(source_ + ":1: missing column '" + std::string(name) + "'");
}

std::string Table::where(std::size_t row) const {
  return source_ + ":" + std::to_string(lines_[row]);
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  double value = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
    throw DataError(where(row) + ": column '" + header_[col] + "' is not a finite number: '" + s + "'");
  return value;
}

std::int64_t Table::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  std::int64_t value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw DataError(where(row) + ": column '" + header_[col] + "' is not an integer: '" + s + "'");
  return value;
}

bool Table::boolean(std::size_t row, std::size_t col) const {
  const std::string& s = rows_[row][col];
  if (s == "true") return true;
  if (s == "false") return false;
  throw DataError(where(row) + ": column '" + header_[col] + "' must be true or false, got '" + s + "'");
}

Table read(std::istream& in, std::string source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::string where = source + ":" + std::to_string(line_no);
    if (!have_header) {
      header = split_record(line, where);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_record(line, where);
    if (fields.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    rows.push_back(std::move(fields));
    lines.push_back(line_no);
  }
  if (!have_header) throw DataError(source + ": empty file, header required");
  return Table(std::move(source), std::move(header), std::move(rows), std::move(lines));
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  return read(in, path);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace appeval::csv
