#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qrh {

/// A parsed comma-separated table. Lines starting with `#` are comments and
/// blank lines are skipped; the first remaining line is the header. Fields are
/// plain (no quoting) and trimmed of surrounding whitespace.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row

  /// Column index by name; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

/// Throws ConfigError on a missing header or a row with the wrong field count.
CsvTable read_csv(std::istream& in, const std::string& source);

/// Parses a double, throwing ConfigError that names `what` on failure.
double parse_double(const std::string& text, const std::string& what);

}  // namespace qrh
