#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace appeval::csv {

/// A parsed CSV file: header plus string cells. Line numbers are 1-based and
/// refer to the physical line in the source (header is line 1).
class Table {
 public:
  Table(std::string source, std::vector<std::string> header,
        std::vector<std::vector<std::string>> rows, std::vector<std::size_t> lines);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

  /// Index of a column; throws DataError naming the source if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  std::size_t line(std::size_t row) const { return lines_[row]; }

  double number(std::size_t row, std::size_t col) const;
  std::int64_t integer(std::size_t row, std::size_t col) const;
  bool boolean(std::size_t row, std::size_t col) const;

  /// "file:line" prefix for diagnostics.
  std::string where(std::size_t row) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

Table read(std::istream& in, std::string source);
Table read_file(const std::string& path);

/// Quotes a field only when it contains a separator, quote or newline.
std::string escape(std::string_view field);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace appeval::csv
