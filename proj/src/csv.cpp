#include "hydrolimit/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hydrolimit/error.hpp"
#include "hydrolimit/format.hpp"

namespace hydrolimit {

std::string format_real(double x) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw Error(Errc::InvalidArgument, "cannot format real");
  return {buf.data(), end};
}

namespace {

bool matches(const Cell& cell, ColumnType type) {
  switch (type) {
    case ColumnType::integer: return std::holds_alternative<std::int64_t>(cell);
    case ColumnType::real: return std::holds_alternative<double>(cell);
    case ColumnType::text: return std::holds_alternative<std::string>(cell);
  }
  return false;
}

void append_field(std::string& out, const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    out += s;
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string cell_text(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_real(*d);
  return std::get<std::string>(cell);
}

// Splits RFC 4180 records; every record ends with LF.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
      records.push_back(std::move(fields));
      fields.clear();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw Error(Errc::ParseError, "unterminated quoted CSV field");
  if (field_started || !fields.empty()) throw Error(Errc::ParseError, "CSV must end with LF");
  return records;
}

Cell parse_cell(const std::string& s, ColumnType type, std::size_t line) {
  const auto fail = [&] {
    throw Error(Errc::ParseError,
                "CSV line " + std::to_string(line) + ": cannot read '" + s + "'");
  };
  switch (type) {
    case ColumnType::integer: {
      std::int64_t v = 0;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size() || s.empty()) fail();
      return v;
    }
    case ColumnType::real: {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size() || s.empty()) fail();
      return v;
    }
    case ColumnType::text: return s;
  }
  return Cell{};
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(Errc::InvalidArgument, "row has " + std::to_string(row.size()) +
                                           " cells, table has " + std::to_string(columns.size()) +
                                           " columns");
  }
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!matches(row[j], columns[j].type)) {
      throw Error(Errc::InvalidArgument, "cell type mismatch in column " + columns[j].name);
    }
  }
  rows.push_back(std::move(row));
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out.push_back(',');
    append_field(out, table.columns[j].name);
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw Error(Errc::InvalidArgument, "table is not rectangular");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!matches(row[j], table.columns[j].type)) {
        throw Error(Errc::InvalidArgument, "cell type mismatch in column " + table.columns[j].name);
      }
      if (j) out.push_back(',');
      append_field(out, cell_text(row[j]));
    }
    out.push_back('\n');
  }
  return out;
}

Table from_csv(const std::string& text, const std::vector<Column>& columns) {
  const auto records = split_records(text);
  if (records.empty()) throw Error(Errc::ParseError, "CSV has no header");
  const auto& header = records.front();
  bool header_ok = header.size() == columns.size();
  for (std::size_t j = 0; header_ok && j < header.size(); ++j) {
    header_ok = header[j] == columns[j].name;
  }
  if (!header_ok) throw Error(Errc::ParseError, "CSV header does not match the expected columns");
  Table table{columns, {}};
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != columns.size()) {
      throw Error(Errc::ParseError, "CSV line " + std::to_string(r + 1) + " has " +
                                        std::to_string(records[r].size()) + " fields");
    }
    std::vector<Cell> row;
    row.reserve(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      row.push_back(parse_cell(records[r][j], columns[j].type, r + 1));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  const std::string text = to_csv(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

Table read_csv(const std::filesystem::path& path, const std::vector<Column>& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str(), columns);
}

}  // namespace hydrolimit
