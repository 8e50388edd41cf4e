#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "agan/agan.hpp"
#include "common/rng.hpp"
#include "schema/ingest.hpp"
#include "tabular/synthesizer.hpp"

namespace hybridsynth::pipeline {

enum class Provenance { RealEncoded, Synthetic, Unmatched };

const char* to_string(Provenance p);
Provenance parse_provenance(const std::string& s);

// What produced a dataset: the seed of every stage that drew random numbers,
// digests of the checkpoints and inputs involved, and row counts.
struct GenerationManifest {
  std::string stage;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> digests;
  std::map<std::string, std::uint64_t> counts;
  std::string timestamp;  // UTC, ISO 8601; SOURCE_DATE_EPOCH pins it

  static std::string now();
  void write(const std::filesystem::path& path) const;
  static GenerationManifest read(const std::filesystem::path& path);
};

nlohmann::json to_json(const GenerationManifest& m);
GenerationManifest manifest_from_json(const nlohmann::json& j);

// Latent columns z0..z{d-1} followed by the clinical columns.
struct EncodedDataset {
  Table table;
  int latent_dim = 0;
  Provenance provenance = Provenance::RealEncoded;
  GenerationManifest manifest;

  std::size_t rows() const { return table.row_count(); }
  void validate() const;
};

std::vector<VariableSpec> latent_columns(int latent_dim);
TableSchema encoded_schema(int latent_dim, const TableSchema& clinical);
// Number of leading z0, z1, ... columns.
int count_latent_columns(const TableSchema& schema);
TableSchema clinical_part(const TableSchema& encoded);

EncodedDataset encode_dataset(const agan::AGanModel& model, const std::vector<HybridRecord>& records,
                              const TableSchema& clinical_schema);

// `expected`, when given, must equal the synthesizer's training header.
EncodedDataset generate_sds(const tabular::TabularSynthesizer& synth, std::size_t n,
                            std::uint64_t seed, const TableSchema* expected = nullptr);

// Row-permutes the latent block against the clinical block.
EncodedDataset make_unmatched(const EncodedDataset& sds, std::uint64_t seed);

std::vector<HybridRecord> decode_dataset(const agan::AGanModel& model,
                                         const EncodedDataset& encoded);

// CSV files carry the table only; provenance and latent width are restored
// by the reader from the caller and the header.
void write_encoded(const std::filesystem::path& path, const EncodedDataset& data);
EncodedDataset read_encoded(const std::filesystem::path& path, const TableSchema& clinical_schema,
                            Provenance provenance);

}  // namespace hybridsynth::pipeline
