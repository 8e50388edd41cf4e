#include "schema/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace hybridsynth {

void HybridRecord::validate(const TableSchema& schema, int image_size) const {
  if (image_size > 0 && (image.height != image_size || image.width != image_size))
    throw DataError("record " + id + ": image is " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) + ", expected " + std::to_string(image_size) +
                    " square");
  if (clinical.size() != schema.size())
    throw DataError("record " + id + ": has " + std::to_string(clinical.size()) +
                    " clinical values, schema has " + std::to_string(schema.size()));
  for (const auto& v : schema.variables())
    if (!clinical.count(v.name)) throw DataError("record " + id + ": missing variable '" + v.name + "'");
}

std::vector<std::string> DatasetSplit::train_val_ids() const {
  std::vector<std::string> out = train_ids;
  out.insert(out.end(), val_ids.begin(), val_ids.end());
  return out;
}

nlohmann::json to_json(const DatasetSplit& split) {
  return nlohmann::json{
      {"train", split.train_ids},
      {"val", split.val_ids},
      {"test", split.test_ids},
      {"seed", split.seed},
      {"counts",
       {{"train", split.train_ids.size()}, {"val", split.val_ids.size()}, {"test", split.test_ids.size()}}},
  };
}

DatasetSplit split_from_json(const nlohmann::json& j) {
  try {
    DatasetSplit s;
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.val_ids = j.at("val").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split manifest: ") + e.what());
  }
}

nlohmann::json to_json(const ImputationModel& model) {
  return nlohmann::json{{"numeric_means", model.numeric_means},
                        {"categorical_missing_token", model.categorical_missing_token}};
}

ImputationModel imputer_from_json(const nlohmann::json& j) {
  try {
    ImputationModel m;
    m.numeric_means = j.at("numeric_means").get<std::map<std::string, double>>();
    m.categorical_missing_token = j.at("categorical_missing_token").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed imputer file: ") + e.what());
  }
}

// ---------------------------------------------------------------- filtering

TableSchema filter_variables(const csv::Document& raw, const FilterOptions& options) {
  if (!(options.missing_threshold > 0.0 && options.missing_threshold < 1.0))
    throw std::invalid_argument("missing_threshold must be in (0, 1)");
  if (raw.rows.empty()) throw DataError("raw table has no rows");
  const std::set<std::string> drop(options.drop.begin(), options.drop.end());
  const std::set<std::string> forced(options.force_categorical.begin(), options.force_categorical.end());
  const double n = static_cast<double>(raw.rows.size());

  std::vector<VariableSpec> kept;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    const std::string& name = raw.header[c];
    if (name == options.id_column || drop.count(name)) continue;
    std::size_t missing = 0;
    bool numeric = !forced.count(name);
    std::vector<std::string> categories;
    std::set<std::string> seen;
    for (const auto& row : raw.rows) {
      const std::string& cell = row[c];
      if (cell.empty()) {
        ++missing;
        continue;
      }
      if (numeric) {
        try {
          parse_value(cell, VariableSpec::numeric(name));
        } catch (const DataError&) {
          numeric = false;
        }
      }
      if (seen.insert(cell).second) categories.push_back(cell);
    }
    // Integer comparison so that e.g. 5 of 100 at threshold 0.05 is kept.
    if (static_cast<double>(missing) > options.missing_threshold * n + 1e-9) continue;
    if (missing == raw.rows.size()) continue;
    if (numeric) {
      kept.push_back(VariableSpec::numeric(name));
    } else {
      if (missing > 0 && !seen.count(kMissingToken)) categories.push_back(kMissingToken);
      kept.push_back(VariableSpec::categorical(name, std::move(categories)));
    }
  }
  if (kept.empty()) throw DataError("every column was dropped by the missing-value filter");
  return TableSchema(std::move(kept));
}

// ---------------------------------------------------------------- split

DatasetSplit split_dataset(const std::vector<std::string>& ids, std::array<double, 3> ratios,
                           std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0)) throw std::invalid_argument("split ratios must be positive");
  if (ids.size() < 3) throw DataError("need at least 3 ids to split into train/val/test");
  {
    std::set<std::string> uniq(ids.begin(), ids.end());
    if (uniq.size() != ids.size()) throw DataError("duplicate record ids");
  }
  const double total = ratios[0] + ratios[1] + ratios[2];
  const std::size_t n = ids.size();
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios[1] / total));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios[2] / total));

  Rng rng(seed);
  std::vector<std::size_t> order = permutation(n, rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> test(order.begin() + n_val, order.begin() + n_val + n_test);
  std::vector<std::size_t> train(order.begin() + n_val + n_test, order.end());
  auto to_ids = [&ids](std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(ids[i]);
    return out;
  };
  DatasetSplit s;
  s.train_ids = to_ids(train);
  s.val_ids = to_ids(val);
  s.test_ids = to_ids(test);
  s.seed = seed;
  return s;
}

// ---------------------------------------------------------------- imputation

ImputationModel fit_imputer(const std::vector<HybridRecord>& train_val_records,
                            const TableSchema& schema) {
  ImputationModel model;
  for (const auto& var : schema.variables()) {
    if (var.is_categorical()) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& rec : train_val_records) {
      auto it = rec.clinical.find(var.name);
      if (it == rec.clinical.end())
        throw DataError("record " + rec.id + " lacks variable '" + var.name + "'");
      if (const auto* d = std::get_if<double>(&it->second)) {
        sum += *d;
        ++count;
      }
    }
    if (count == 0)
      throw DataError("numeric variable '" + var.name + "' has no observed values in train+val");
    model.numeric_means[var.name] = sum / static_cast<double>(count);
  }
  return model;
}

HybridRecord apply_imputer(const HybridRecord& record, const ImputationModel& model,
                           const TableSchema& schema) {
  HybridRecord out = record;
  for (const auto& var : schema.variables()) {
    auto it = out.clinical.find(var.name);
    if (it == out.clinical.end())
      throw DataError("record " + record.id + " lacks variable '" + var.name + "'");
    if (var.is_categorical()) {
      if (is_missing(it->second)) it->second = model.categorical_missing_token;
    } else {
      auto mean = model.numeric_means.find(var.name);
      if (mean == model.numeric_means.end())
        throw DataError("imputation model has no mean for '" + var.name + "'");
      if (is_missing(it->second)) it->second = mean->second;
    }
  }
  return out;
}

// ---------------------------------------------------------------- resize

Image resize_image(const Image& image, int target_size) {
  if (target_size <= 0) throw std::invalid_argument("resize target must be positive");
  if ((target_size & (target_size - 1)) != 0)
    throw std::invalid_argument("resize target must be a power of two");
  if (image.empty()) throw DataError("cannot resize an empty image");
  if (image.height == target_size && image.width == target_size) return image;

  Image out(target_size, target_size);
  const double sy = static_cast<double>(image.height) / target_size;
  const double sx = static_cast<double>(image.width) / target_size;
  auto coord = [](int o, double scale, int n, int& i0, int& i1, double& t) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<int>(std::floor(src));
    i1 = std::min(i0 + 1, n - 1);
    t = src - i0;
  };
  for (int oy = 0; oy < target_size; ++oy) {
    int y0, y1;
    double ty;
    coord(oy, sy, image.height, y0, y1, ty);
    for (int ox = 0; ox < target_size; ++ox) {
      int x0, x1;
      double tx;
      coord(ox, sx, image.width, x0, x1, tx);
      const double top = image.at(y0, x0) * (1 - tx) + image.at(y0, x1) * tx;
      const double bottom = image.at(y1, x0) * (1 - tx) + image.at(y1, x1) * tx;
      out.at(oy, ox) = static_cast<float>(std::clamp(top * (1 - ty) + bottom * ty, -1.0, 1.0));
    }
  }
  return out;
}

// ---------------------------------------------------------------- corpus IO

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

const HybridRecord& Corpus::by_id(const std::string& id) const {
  for (const auto& r : records)
    if (r.id == id) return r;
  throw DataError("corpus has no record '" + id + "'");
}

std::vector<HybridRecord> Corpus::subset(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, const HybridRecord*> index;
  for (const auto& r : records) index[r.id] = &r;
  std::vector<HybridRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("corpus has no record '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& records_csv, const std::filesystem::path& image_dir,
                   const TableSchema& schema, const std::string& id_column) {
  const csv::Document doc = csv::read_file(records_csv);
  const std::size_t id_col = doc.column_index(id_column);
  std::vector<std::size_t> cols;
  for (const auto& v : schema.variables()) cols.push_back(doc.column_index(v.name));

  Corpus corpus;
  corpus.schema = schema;
  std::set<std::string> seen;
  for (const auto& row : doc.rows) {
    HybridRecord rec;
    rec.id = row[id_col];
    if (rec.id.empty()) throw DataError(records_csv.string() + ": empty record id");
    if (!seen.insert(rec.id).second) throw DataError("duplicate record id '" + rec.id + "'");
    for (std::size_t i = 0; i < cols.size(); ++i)
      rec.clinical[schema.at(i).name] = parse_value(row[cols[i]], schema.at(i));
    rec.image = png::read(image_dir / (rec.id + ".png"));
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  csv::Document doc;
  doc.header.push_back("id");
  for (const auto& n : corpus.schema.names()) doc.header.push_back(n);
  for (const auto& rec : corpus.records) {
    rec.validate(corpus.schema);
    std::vector<std::string> row{rec.id};
    for (const auto& v : corpus.schema.variables()) row.push_back(value_to_text(rec.clinical.at(v.name)));
    doc.rows.push_back(std::move(row));
    png::write(dir / "images" / (rec.id + ".png"), rec.image);
  }
  csv::write_file(dir / "records.csv", doc);
}

Table clinical_table(const std::vector<HybridRecord>& records, const TableSchema& schema) {
  Table t(schema);
  t.rows.reserve(records.size());
  for (const auto& rec : records) {
    std::vector<Value> row;
    row.reserve(schema.size());
    for (const auto& v : schema.variables()) {
      auto it = rec.clinical.find(v.name);
      if (it == rec.clinical.end())
        throw DataError("record " + rec.id + " lacks variable '" + v.name + "'");
      row.push_back(it->second);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace hybridsynth
