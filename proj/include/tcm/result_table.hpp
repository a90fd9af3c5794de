#pragma once

// Typed result tables persisted as CSV (with a '#'-prefixed key=value
// metadata block) or JSON.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tcm {

inline constexpr const char* kToolVersion = "1.0.0";

enum class ColumnType { Integer, Real, Text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::Real;
};

using Cell = std::variant<std::int64_t, double, std::string>;

enum class TableFormat { Csv, Json };

class ResultTable {
 public:
  ResultTable() = default;
  explicit ResultTable(std::vector<Column> schema);

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return metadata_; }

  void add_row(std::vector<Cell> row);
  /// Inserts or overwrites, keeping first-insertion order.
  void set_meta(const std::string& key, std::string value);
  std::optional<std::string> meta(const std::string& key) const;

  std::size_t column_index(const std::string& name) const;
  double real(std::size_t row, const std::string& column) const;
  std::int64_t integer(std::size_t row, const std::string& column) const;

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::string>> metadata_;
};

/// 17 significant digits; round-trips every finite double bitwise.
std::string format_real(double value);

std::string to_csv(const ResultTable& table, bool include_timestamp = true);
std::string to_json(const ResultTable& table, bool include_timestamp = true);

/// Everything after the metadata block: header row plus data rows.
std::string csv_data_section(const std::string& csv);

void save_table(const ResultTable& table, const std::filesystem::path& path, TableFormat format = TableFormat::Csv);
ResultTable load_table(const std::filesystem::path& path);
ResultTable parse_csv_table(const std::string& text, const std::string& source = "<memory>");

}  // namespace tcm
