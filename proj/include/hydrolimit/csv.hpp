#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace hydrolimit {

enum class ColumnType { integer, real, text };

struct Column {
  std::string name;
  ColumnType type;
  friend bool operator==(const Column&, const Column&) = default;
};

using Cell = std::variant<std::int64_t, double, std::string>;

/// Rectangular typed table. The column list is the header.
struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;

  /// Appends a row; throws InvalidArgument on a width or type mismatch.
  void add_row(std::vector<Cell> row);
  friend bool operator==(const Table&, const Table&) = default;
};

/// RFC 4180 text with LF line endings; reals use the shortest round-trip form.
std::string to_csv(const Table& table);
/// Parses text produced by to_csv against the expected columns (header must match).
Table from_csv(const std::string& text, const std::vector<Column>& columns);

/// Throws IoError.
void write_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path, const std::vector<Column>& columns);

}  // namespace hydrolimit
