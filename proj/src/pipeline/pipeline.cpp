#include "pipeline/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "common/error.hpp"

namespace hybridsynth::pipeline {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::RealEncoded: return "real-encoded";
    case Provenance::Synthetic: return "synthetic";
    case Provenance::Unmatched: return "unmatched";
  }
  return "?";
}

Provenance parse_provenance(const std::string& s) {
  if (s == "real-encoded") return Provenance::RealEncoded;
  if (s == "synthetic") return Provenance::Synthetic;
  if (s == "unmatched") return Provenance::Unmatched;
  throw DataError("unknown provenance '" + s + "'");
}

// ---------------------------------------------------------------- manifest

std::string GenerationManifest::now() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = std::strtoll(epoch, nullptr, 10);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json(const GenerationManifest& m) {
  return {{"stage", m.stage},
          {"seeds", m.seeds},
          {"digests", m.digests},
          {"counts", m.counts},
          {"timestamp", m.timestamp}};
}

GenerationManifest manifest_from_json(const nlohmann::json& j) {
  GenerationManifest m;
  m.stage = j.value("stage", "");
  m.seeds = j.value("seeds", std::map<std::string, std::uint64_t>{});
  m.digests = j.value("digests", std::map<std::string, std::string>{});
  m.counts = j.value("counts", std::map<std::string, std::uint64_t>{});
  m.timestamp = j.value("timestamp", "");
  return m;
}

void GenerationManifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(*this).dump(2) << '\n';
}

GenerationManifest GenerationManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- layout

std::vector<VariableSpec> latent_columns(int latent_dim) {
  std::vector<VariableSpec> out;
  for (int i = 0; i < latent_dim; ++i) out.push_back(VariableSpec::numeric("z" + std::to_string(i)));
  return out;
}

TableSchema encoded_schema(int latent_dim, const TableSchema& clinical) {
  return clinical.prepend(latent_columns(latent_dim));
}

int count_latent_columns(const TableSchema& schema) {
  int d = 0;
  while (static_cast<std::size_t>(d) < schema.size() &&
         schema.at(d).name == "z" + std::to_string(d) && !schema.at(d).is_categorical())
    ++d;
  return d;
}

TableSchema clinical_part(const TableSchema& encoded) {
  const int d = count_latent_columns(encoded);
  std::vector<VariableSpec> rest(encoded.variables().begin() + d, encoded.variables().end());
  return TableSchema(std::move(rest));
}

void EncodedDataset::validate() const {
  if (latent_dim < 1) throw DataError("encoded dataset has no latent columns");
  if (count_latent_columns(table.schema) != latent_dim)
    throw DataError("encoded dataset header does not start with z0..z" +
                    std::to_string(latent_dim - 1));
  table.validate();
}

// ---------------------------------------------------------------- stages

EncodedDataset encode_dataset(const agan::AGanModel& model, const std::vector<HybridRecord>& records,
                              const TableSchema& clinical_schema) {
  const int d = model.config().latent_dim;
  EncodedDataset out;
  out.latent_dim = d;
  out.provenance = Provenance::RealEncoded;
  out.table = Table(encoded_schema(d, clinical_schema));
  out.manifest.stage = "encode";
  out.manifest.counts["records"] = records.size();

  std::vector<Image> images;
  images.reserve(records.size());
  for (const auto& rec : records) {
    try {
      rec.validate(clinical_schema, model.config().image_size);
    } catch (const std::exception& e) {
      throw DataError("encode: record " + rec.id + ": " + e.what());
    }
    images.push_back(rec.image);
  }
  std::vector<agan::LatentCode> codes;
  try {
    codes = model.encode_batch(images);
  } catch (const NumericError&) {
    // Find the offending record for the message.
    for (const auto& rec : records) {
      try {
        model.encode(rec.image);
      } catch (const NumericError& e) {
        throw NumericError("encode: record " + rec.id + ": " + e.what());
      }
    }
    throw;
  }

  const Table clinical = clinical_table(records, clinical_schema);
  out.table.rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<Value> row;
    row.reserve(out.table.column_count());
    for (float z : codes[i].values) row.emplace_back(static_cast<double>(z));
    row.insert(row.end(), clinical.rows[i].begin(), clinical.rows[i].end());
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

EncodedDataset generate_sds(const tabular::TabularSynthesizer& synth, std::size_t n,
                            std::uint64_t seed, const TableSchema* expected) {
  if (!synth.fitted()) throw std::logic_error("generate_sds: synthesizer is not fitted");
  if (expected && !(*expected == synth.schema()))
    throw DataError("generate_sds: synthesizer was fitted on a different header");
  const int d = count_latent_columns(synth.schema());
  if (d < 1) throw DataError("generate_sds: synthesizer header has no latent columns");
  Rng rng(seed);
  EncodedDataset out;
  out.table = synth.sample(n, rng);
  out.latent_dim = d;
  out.provenance = Provenance::Synthetic;
  out.manifest.stage = "sample";
  out.manifest.seeds["sample"] = seed;
  out.manifest.counts["rows"] = n;
  return out;
}

EncodedDataset make_unmatched(const EncodedDataset& sds, std::uint64_t seed) {
  if (sds.provenance != Provenance::Synthetic)
    throw DataError(std::string("make_unmatched: input provenance is ") + to_string(sds.provenance) +
                    ", expected synthetic");
  Rng rng(seed);
  const std::vector<std::size_t> perm = permutation(sds.rows(), rng);
  EncodedDataset out = sds;
  const auto d = static_cast<std::size_t>(sds.latent_dim);
  for (std::size_t i = 0; i < sds.rows(); ++i)
    std::copy_n(sds.table.rows[perm[i]].begin(), d, out.table.rows[i].begin());
  out.provenance = Provenance::Unmatched;
  out.manifest.stage = "make-unmatched";
  out.manifest.seeds["unmatched"] = seed;
  out.manifest.counts["rows"] = sds.rows();
  return out;
}

std::vector<HybridRecord> decode_dataset(const agan::AGanModel& model,
                                         const EncodedDataset& encoded) {
  const int d = model.config().latent_dim;
  if (encoded.latent_dim != d)
    throw DataError("decode: dataset has " + std::to_string(encoded.latent_dim) +
                    " latent columns, model expects " + std::to_string(d));
  const TableSchema clinical = clinical_part(encoded.table.schema);
  std::vector<agan::LatentCode> codes;
  codes.reserve(encoded.rows());
  for (const auto& row : encoded.table.rows) {
    agan::LatentCode c;
    c.values.reserve(d);
    for (int j = 0; j < d; ++j) {
      const auto* v = std::get_if<double>(&row.at(j));
      if (!v || !std::isfinite(*v)) throw DataError("decode: non-numeric latent value");
      c.values.push_back(static_cast<float>(*v));
    }
    codes.push_back(std::move(c));
  }
  std::vector<Image> images = model.decode_batch(codes);
  std::vector<HybridRecord> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    HybridRecord rec;
    rec.id = "syn-" + std::to_string(i);
    rec.image = std::move(images[i]);
    for (std::size_t c = 0; c < clinical.size(); ++c)
      rec.clinical[clinical.at(c).name] = encoded.table.rows[i][d + c];
    out.push_back(std::move(rec));
  }
  return out;
}

void write_encoded(const std::filesystem::path& path, const EncodedDataset& data) {
  data.table.write_csv(path);
}

EncodedDataset read_encoded(const std::filesystem::path& path, const TableSchema& clinical_schema,
                            Provenance provenance) {
  const csv::Document doc = csv::read_file(path);
  int d = 0;
  while (static_cast<std::size_t>(d) < doc.header.size() && doc.header[d] == "z" + std::to_string(d))
    ++d;
  if (d == 0) throw DataError(path.string() + ": header has no latent columns z0..");
  EncodedDataset out;
  out.latent_dim = d;
  out.provenance = provenance;
  out.table = table_from_csv(doc, encoded_schema(d, clinical_schema));
  return out;
}

}  // namespace hybridsynth::pipeline
