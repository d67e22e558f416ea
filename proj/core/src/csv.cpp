#include <flowmap/csv.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <flowmap/errors.hpp>

namespace flowmap {

void write_csv_row(std::ostream& os, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    const std::string& f = row[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      os << f;
      continue;
    }
    os << '"';
    for (char c : f) {
      if (c == '"') os << '"';
      os << c;
    }
    os << '"';
  }
  os << "\r\n";
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<CsvRow> parse_csv(std::istream& is) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (is.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (is.peek() == '\n') is.get(c);
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
    }
  }
  require(!quoted, ErrorKind::io, "unterminated quoted CSV field");
  if (any) end_row();
  return rows;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

NumericTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open '" + path + "'");
  const auto raw = parse_csv(in);
  NumericTable t;
  for (std::size_t r = 0; r < raw.size(); ++r) {
    std::vector<double> vals(raw[r].size());
    bool ok = true;
    for (std::size_t k = 0; k < raw[r].size() && ok; ++k) ok = parse_double(raw[r][k], vals[k]);
    if (!ok) {
      require(r == 0, ErrorKind::io, path + ": non-numeric value on row " + std::to_string(r + 1));
      t.header = raw[r];
      continue;
    }
    if (!t.rows.empty())
      require(vals.size() == t.rows.front().size(), ErrorKind::io,
              path + ": ragged row " + std::to_string(r + 1));
    t.rows.push_back(std::move(vals));
  }
  require(!t.rows.empty(), ErrorKind::io, path + ": no data rows");
  return t;
}

}  // namespace flowmap
