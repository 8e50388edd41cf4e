#include "schema/table.hpp"

#include <charconv>
#include <cmath>

#include "common/error.hpp"

namespace hybridsynth {

std::vector<double> Table::numeric_column(std::size_t col) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto* d = std::get_if<double>(&rows[r].at(col));
    if (!d)
      throw DataError("column '" + schema.at(col).name + "' row " + std::to_string(r) +
                      " is not a number");
    out.push_back(*d);
  }
  return out;
}

std::vector<double> Table::numeric_column(const std::string& name) const {
  auto idx = schema.index_of(name);
  if (!idx) throw DataError("table has no column '" + name + "'");
  return numeric_column(*idx);
}

std::vector<std::string> Table::text_column(std::size_t col) const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(value_to_text(r.at(col)));
  return out;
}

void Table::validate(bool allow_missing) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != schema.size())
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                      " cells, schema has " + std::to_string(schema.size()));
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& spec = schema.at(c);
      const Value& v = rows[r][c];
      if (is_missing(v)) {
        if (!allow_missing)
          throw DataError("missing value in '" + spec.name + "' row " + std::to_string(r));
        continue;
      }
      if (spec.is_categorical()) {
        const auto* s = std::get_if<std::string>(&v);
        if (!s || !spec.category_index(*s))
          throw DataError("unknown category '" + value_to_text(v) + "' in '" + spec.name + "'");
      } else if (!std::holds_alternative<double>(v)) {
        throw DataError("non-numeric value '" + value_to_text(v) + "' in numeric column '" +
                        spec.name + "'");
      }
    }
  }
}

csv::Document Table::to_csv() const {
  csv::Document doc;
  doc.header = schema.names();
  doc.rows.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> fields;
    fields.reserve(r.size());
    for (const auto& v : r) fields.push_back(value_to_text(v));
    doc.rows.push_back(std::move(fields));
  }
  return doc;
}

void Table::write_csv(const std::filesystem::path& path) const { csv::write_file(path, to_csv()); }

Value parse_value(const std::string& text, const VariableSpec& spec, bool allow_unknown_category) {
  if (text.empty()) return std::monostate{};
  if (spec.is_categorical()) {
    if (!allow_unknown_category && !spec.category_index(text))
      throw DataError("unknown category '" + text + "' for '" + spec.name + "'");
    return text;
  }
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  // from_chars rejects a leading '+'; accept it for hand-written files.
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw DataError("non-numeric value '" + text + "' in numeric column '" + spec.name + "'");
  return v;
}

Table table_from_csv(const csv::Document& doc, const TableSchema& schema) {
  if (doc.header != schema.names()) {
    std::string got, want;
    for (const auto& h : doc.header) got += (got.empty() ? "" : ",") + h;
    for (const auto& h : schema.names()) want += (want.empty() ? "" : ",") + h;
    throw DataError("header mismatch: got [" + got + "], expected [" + want + "]");
  }
  Table t(schema);
  t.rows.reserve(doc.rows.size());
  for (const auto& fields : doc.rows) {
    std::vector<Value> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) row.push_back(parse_value(fields[c], schema.at(c)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_table_csv(const std::filesystem::path& path, const TableSchema& schema) {
  return table_from_csv(csv::read_file(path), schema);
}

}  // namespace hybridsynth
