#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/csv.hpp"
#include "common/image.hpp"
#include "schema/schema.hpp"
#include "schema/table.hpp"

namespace hybridsynth {

struct HybridRecord {
  std::string id;
  Image image;
  std::map<std::string, Value> clinical;

  // Image must be square with side `image_size` (0 skips the check) and the
  // clinical keys must be exactly the schema's names.
  void validate(const TableSchema& schema, int image_size = 0) const;
};

struct DatasetSplit {
  std::vector<std::string> train_ids, val_ids, test_ids;
  std::uint64_t seed = 0;

  std::vector<std::string> train_val_ids() const;
};

nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j);

struct ImputationModel {
  std::map<std::string, double> numeric_means;
  std::string categorical_missing_token = kMissingToken;
};

nlohmann::json to_json(const ImputationModel& model);
ImputationModel imputer_from_json(const nlohmann::json& j);

struct FilterOptions {
  double missing_threshold = 0.05;
  std::string id_column = "id";
  // Near-duplicate columns are removed by name; there is no automatic criterion.
  std::vector<std::string> drop;
  // Columns forced categorical even if every value parses as a number.
  std::vector<std::string> force_categorical;
};

// Keeps columns whose missing fraction is <= threshold and that are not in
// the drop list; infers kinds and category lists (first-appearance order,
// with the missing token appended when the column has gaps).
TableSchema filter_variables(const csv::Document& raw, const FilterOptions& options);

// Sizes are floor(n * ratio / sum) for validation and test; the remainder
// goes to training. Lists keep the input order of the ids.
DatasetSplit split_dataset(const std::vector<std::string>& ids,
                           std::array<double, 3> ratios = {6, 2, 2}, std::uint64_t seed = 0);

ImputationModel fit_imputer(const std::vector<HybridRecord>& train_val_records,
                            const TableSchema& schema);
HybridRecord apply_imputer(const HybridRecord& record, const ImputationModel& model,
                           const TableSchema& schema);

// Bilinear (half-pixel centred) resize to target x target; output clamped
// to [-1, 1]. Target must be a positive power of two.
Image resize_image(const Image& image, int target_size);

// ---- corpus files: records.csv (id + clinical columns) and images/{id}.png

struct Corpus {
  TableSchema schema;
  std::vector<HybridRecord> records;

  std::vector<std::string> ids() const;
  const HybridRecord& by_id(const std::string& id) const;
  std::vector<HybridRecord> subset(const std::vector<std::string>& ids) const;
};

// Reads records.csv with the given schema; clinical cells are parsed
// against it, images read from `image_dir`.
Corpus load_corpus(const std::filesystem::path& records_csv, const std::filesystem::path& image_dir,
                   const TableSchema& schema, const std::string& id_column = "id");
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

// Clinical part of records as a typed table in schema order.
Table clinical_table(const std::vector<HybridRecord>& records, const TableSchema& schema);

}  // namespace hybridsynth
