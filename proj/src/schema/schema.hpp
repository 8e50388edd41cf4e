#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace hybridsynth {

enum class VariableKind { Categorical, Numeric };

const char* to_string(VariableKind kind);
VariableKind parse_variable_kind(const std::string& s);

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::Numeric;
  std::vector<std::string> categories;  // categorical only; may contain the missing token
  std::string unit;                     // numeric only, free text

  void validate() const;
  bool is_categorical() const { return kind == VariableKind::Categorical; }
  std::optional<std::size_t> category_index(const std::string& value) const;

  static VariableSpec categorical(std::string name, std::vector<std::string> categories);
  static VariableSpec numeric(std::string name, std::string unit = {});
};

class TableSchema {
 public:
  TableSchema() = default;
  explicit TableSchema(std::vector<VariableSpec> variables);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  std::size_t size() const { return variables_.size(); }
  const VariableSpec& at(std::size_t i) const { return variables_.at(i); }
  const VariableSpec& find(const std::string& name) const;  // throws DataError
  std::optional<std::size_t> index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_of(name).has_value(); }
  std::vector<std::string> names() const;
  std::size_t categorical_count() const;
  std::size_t numeric_count() const;

  // Returns a schema with `prefix` variables inserted in front.
  TableSchema prepend(const std::vector<VariableSpec>& prefix) const;
  TableSchema without(const std::string& name) const;

  friend bool operator==(const TableSchema&, const TableSchema&);

 private:
  std::vector<VariableSpec> variables_;
};

bool operator==(const VariableSpec& a, const VariableSpec& b);

// The 13 clinical variables of the COVID-19 chest radiograph cohort
// (7 categorical, 6 numeric).
TableSchema clinical_cxr_schema();

inline constexpr const char* kMissingToken = "NA";

nlohmann::json to_json(const TableSchema& schema);
TableSchema schema_from_json(const nlohmann::json& j);

// A clinical or tabular cell: missing, numeric, or categorical text.
using Value = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Value& v) { return std::holds_alternative<std::monostate>(v); }
std::string value_to_text(const Value& v);

}  // namespace hybridsynth
