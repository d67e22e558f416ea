#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flowmap {

using CsvRow = std::vector<std::string>;

/// RFC-4180: comma separated, CRLF line ends, fields quoted when needed.
void write_csv_row(std::ostream& os, const CsvRow& row);
[[nodiscard]] std::string format_number(double v);

[[nodiscard]] std::vector<CsvRow> parse_csv(std::istream& is);

struct NumericTable {
  std::vector<std::string> header;  // empty when the file has none
  std::vector<std::vector<double>> rows;
};

/// Reads a CSV of numbers; a leading non-numeric row is taken as the header.
[[nodiscard]] NumericTable read_numeric_csv(const std::string& path);

}  // namespace flowmap
