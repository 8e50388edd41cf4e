#include "schema/schema.hpp"

#include <charconv>
#include <set>
#include <stdexcept>

#include "common/error.hpp"

namespace hybridsynth {

const char* to_string(VariableKind kind) {
  return kind == VariableKind::Categorical ? "categorical" : "numeric";
}

VariableKind parse_variable_kind(const std::string& s) {
  if (s == "categorical") return VariableKind::Categorical;
  if (s == "numeric") return VariableKind::Numeric;
  throw DataError("unknown variable kind '" + s + "'");
}

void VariableSpec::validate() const {
  if (name.empty()) throw DataError("variable with empty name");
  if (kind == VariableKind::Categorical) {
    if (categories.empty()) throw DataError("categorical variable '" + name + "' has no categories");
    std::set<std::string> seen;
    for (const auto& c : categories)
      if (!seen.insert(c).second)
        throw DataError("categorical variable '" + name + "' repeats category '" + c + "'");
  } else if (!categories.empty()) {
    throw DataError("numeric variable '" + name + "' must not list categories");
  }
}

std::optional<std::size_t> VariableSpec::category_index(const std::string& value) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == value) return i;
  return std::nullopt;
}

VariableSpec VariableSpec::categorical(std::string name, std::vector<std::string> categories) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::Categorical;
  v.categories = std::move(categories);
  return v;
}

VariableSpec VariableSpec::numeric(std::string name, std::string unit) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::Numeric;
  v.unit = std::move(unit);
  return v;
}

bool operator==(const VariableSpec& a, const VariableSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.categories == b.categories && a.unit == b.unit;
}

TableSchema::TableSchema(std::vector<VariableSpec> variables) : variables_(std::move(variables)) {
  std::set<std::string> names;
  for (const auto& v : variables_) {
    v.validate();
    if (!names.insert(v.name).second) throw DataError("duplicate variable name '" + v.name + "'");
  }
}

const VariableSpec& TableSchema::find(const std::string& name) const {
  if (auto i = index_of(name)) return variables_[*i];
  throw DataError("schema has no variable '" + name + "'");
}

std::optional<std::size_t> TableSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> TableSchema::names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) out.push_back(v.name);
  return out;
}

std::size_t TableSchema::categorical_count() const {
  std::size_t n = 0;
  for (const auto& v : variables_) n += v.is_categorical();
  return n;
}

std::size_t TableSchema::numeric_count() const { return size() - categorical_count(); }

TableSchema TableSchema::prepend(const std::vector<VariableSpec>& prefix) const {
  std::vector<VariableSpec> all = prefix;
  all.insert(all.end(), variables_.begin(), variables_.end());
  return TableSchema(std::move(all));
}

TableSchema TableSchema::without(const std::string& name) const {
  std::vector<VariableSpec> kept;
  for (const auto& v : variables_)
    if (v.name != name) kept.push_back(v);
  return TableSchema(std::move(kept));
}

bool operator==(const TableSchema& a, const TableSchema& b) { return a.variables_ == b.variables_; }

TableSchema clinical_cxr_schema() {
  using V = VariableSpec;
  return TableSchema({
      V::categorical("Last Status", {"deceased", "discharged"}),
      V::categorical("Age Splits", {"[18,59]", "(59, 74]", "(74, 90]"}),
      V::categorical("Gender Concept Name", {"FEMALE", "MALE", kMissingToken}),
      V::categorical("Visit Concept Name",
                     {"Inpatient Visit", "Outpatient Visit", "Emergency Room Visit"}),
      V::categorical("Is ICU", {"True", "False"}),
      V::categorical("Was Ventilated", {"Yes", "No"}),
      V::categorical("Acute Kidney Injury", {"Yes", "No"}),
      V::numeric("Length of Stay", "days"),
      V::numeric("Oral Temperature", "degC"),
      V::numeric("Oxygen Saturation", "%"),
      V::numeric("Respiratory Rate", "/min"),
      V::numeric("Heart Rate", "/min"),
      V::numeric("Systolic Blood Pressure", "mmHg"),
  });
}

nlohmann::json to_json(const TableSchema& schema) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : schema.variables()) {
    nlohmann::json j{{"name", v.name}, {"kind", to_string(v.kind)}};
    if (v.is_categorical())
      j["categories"] = v.categories;
    else
      j["unit"] = v.unit;
    vars.push_back(j);
  }
  return nlohmann::json{{"variables", vars}};
}

TableSchema schema_from_json(const nlohmann::json& j) {
  try {
    std::vector<VariableSpec> vars;
    for (const auto& v : j.at("variables")) {
      VariableSpec s;
      s.name = v.at("name").get<std::string>();
      s.kind = parse_variable_kind(v.at("kind").get<std::string>());
      if (s.is_categorical())
        s.categories = v.at("categories").get<std::vector<std::string>>();
      else
        s.unit = v.value("unit", std::string{});
      vars.push_back(std::move(s));
    }
    return TableSchema(std::move(vars));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema JSON: ") + e.what());
  }
}

std::string value_to_text(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, res.ptr);
  }
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return {};
}

}  // namespace hybridsynth
