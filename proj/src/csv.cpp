#include "tailored/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tailored/error.hpp"

namespace tailored {

std::optional<std::size_t> CsvTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
  const auto idx = column_index(name);
  if (!idx) throw DataError("missing column '" + std::string(name) + "'");
  return *idx;
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  const std::size_t c = require_column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(parse_double(row[c], name));
  return out;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // skip blank lines
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) throw DataError("stray quote inside unquoted CSV field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted CSV field");
  if (field_started || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw DataError("CSV input has no header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError("CSV row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

namespace {

void append_field(std::string& out, const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) {
    out += field;
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void append_record(std::string& out, const std::vector<std::string>& record) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i) out.push_back(',');
    append_field(out, record[i]);
  }
  out += "\r\n";
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  append_record(out, table.header);
  for (const auto& row : table.rows) append_record(out, row);
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  write_text_file(path, format_csv(table));
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || text.empty()) {
    throw DataError("cannot parse '" + std::string(text) + "' as a number (" + std::string(context) +
                    ")");
  }
  return value;
}

namespace {

LoadedDataset build_dataset(const CsvTable& table, const std::string& outcome_column,
                            const std::vector<std::string>& ignored, bool outcome_required,
                            bool* had_outcome) {
  const auto y_col = table.column_index(outcome_column);
  if (!y_col && outcome_required) throw DataError("missing outcome column '" + outcome_column + "'");
  if (had_outcome) *had_outcome = y_col.has_value();
  const auto id_col = table.column_index("id");

  std::vector<std::size_t> x_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if ((y_col && c == *y_col) || (id_col && c == *id_col)) continue;
    if (std::ranges::find(ignored, table.header[c]) != ignored.end()) continue;
    x_cols.push_back(c);
    names.push_back(table.header[c]);
  }
  if (table.rows.empty()) throw DataError("dataset has no rows");

  std::vector<int> y;
  std::vector<std::string> ids;
  Matrix x(table.rows.size(), x_cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (y_col) {
      const std::string& v = row[*y_col];
      if (v == "0") {
        y.push_back(0);
      } else if (v == "1") {
        y.push_back(1);
      } else {
        throw DataError("outcome on data row " + std::to_string(r + 1) + " is '" + v +
                        "', expected 0 or 1");
      }
    } else {
      y.push_back(0);
    }
    for (std::size_t k = 0; k < x_cols.size(); ++k) x(r, k) = parse_double(row[x_cols[k]], names[k]);
    ids.push_back(id_col ? row[*id_col] : std::to_string(r));
  }
  return {Dataset::with_intercept(std::move(y), x, std::move(names)), std::move(ids)};
}

}  // namespace

LoadedDataset load_dataset(const std::string& path, const std::string& outcome_column,
                           const std::vector<std::string>& ignored_columns) {
  return build_dataset(read_csv(path), outcome_column, ignored_columns, true, nullptr);
}

LoadedDataset load_covariates(const std::string& path, const std::string& outcome_column,
                              const std::vector<std::string>& ignored_columns, bool* had_outcome) {
  return build_dataset(read_csv(path), outcome_column, ignored_columns, false, had_outcome);
}

}  // namespace tailored
