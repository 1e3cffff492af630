#include "opart/io_format.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "opart/error.hpp"

namespace opart {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw Error("not a number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_integer(std::string_view text) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

CsvTable CsvTable::parse(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error("unterminated quoted CSV field");
  if (field_started || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw Error("CSV input has no header");
  table.header_ = std::move(records.front());
  table.rows_.assign(std::make_move_iterator(records.begin() + 1),
                     std::make_move_iterator(records.end()));
  return table;
}

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return parse(in);
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

void write_matrix_csv(std::ostream& out, const Matrix& m,
                      const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& column_ids, const std::string& corner) {
  if (static_cast<std::size_t>(m.rows()) != row_ids.size() ||
      static_cast<std::size_t>(m.cols()) != column_ids.size()) {
    throw Error("matrix shape does not match its labels");
  }
  std::vector<std::string> fields{corner};
  fields.insert(fields.end(), column_ids.begin(), column_ids.end());
  write_csv_row(out, fields);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    fields.assign(1, row_ids[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.cols(); ++c) fields.push_back(format_double(m(r, c)));
    write_csv_row(out, fields);
  }
}

LabeledMatrix read_matrix_csv(std::istream& in) {
  const auto table = CsvTable::parse(in);
  if (table.header().size() < 2) throw Error("matrix CSV needs at least one value column");
  LabeledMatrix out;
  out.column_ids.assign(table.header().begin() + 1, table.header().end());
  const auto cols = static_cast<Eigen::Index>(out.column_ids.size());
  out.values.resize(static_cast<Eigen::Index>(table.rows().size()), cols);
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    if (static_cast<Eigen::Index>(row.size()) != cols + 1) {
      throw Error("matrix CSV row " + std::to_string(r + 2) + " has " +
                  std::to_string(row.size()) + " fields");
    }
    out.row_ids.push_back(row[0]);
    for (Eigen::Index c = 0; c < cols; ++c) {
      out.values(static_cast<Eigen::Index>(r), c) =
          parse_double(row[static_cast<std::size_t>(c) + 1]);
    }
  }
  return out;
}

}  // namespace opart
