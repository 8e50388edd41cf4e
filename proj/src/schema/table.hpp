#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "common/csv.hpp"
#include "schema/schema.hpp"

namespace hybridsynth {

// Row-major typed table whose columns are exactly the schema variables.
struct Table {
  TableSchema schema;
  std::vector<std::vector<Value>> rows;

  Table() = default;
  explicit Table(TableSchema s) : schema(std::move(s)) {}

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return schema.size(); }

  // Numeric column as doubles; throws DataError on missing or non-numeric cells.
  std::vector<double> numeric_column(std::size_t col) const;
  std::vector<double> numeric_column(const std::string& name) const;
  std::vector<std::string> text_column(std::size_t col) const;

  // Checks every row against the schema (width, kinds, known categories).
  void validate(bool allow_missing = true) const;

  csv::Document to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

// Parses one cell. Empty text is missing. Numeric cells must parse fully
// as a finite number; categorical cells must be a declared category unless
// `allow_unknown_category` is set.
Value parse_value(const std::string& text, const VariableSpec& spec,
                  bool allow_unknown_category = false);

// Header must equal the schema's variable names, in order.
Table table_from_csv(const csv::Document& doc, const TableSchema& schema);
Table read_table_csv(const std::filesystem::path& path, const TableSchema& schema);

}  // namespace hybridsynth
