#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "opart/matrix.hpp"

namespace opart {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
/// Strict parse of a whole field; throws opart::Error on trailing garbage.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
class CsvTable {
 public:
  static CsvTable parse(std::istream& in);
  static CsvTable read_file(const std::string& path);

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  /// Column index by name, or -1.
  int column(std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Header "<corner>,<column ids>", then one row per row id.
void write_matrix_csv(std::ostream& out, const Matrix& m,
                      const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& column_ids,
                      const std::string& corner = "location_id");

struct LabeledMatrix {
  Matrix values;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;
};

LabeledMatrix read_matrix_csv(std::istream& in);

}  // namespace opart
