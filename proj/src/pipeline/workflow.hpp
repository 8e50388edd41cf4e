#pragma once

// File-level stages of the workflow. Each stage reads its inputs from disk,
// writes its outputs, derives its seed from one master seed and returns a
// manifest for the caller to store next to the outputs.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "agan/agan.hpp"
#include "eval/harness.hpp"
#include "eval/tsne.hpp"
#include "pipeline/pipeline.hpp"
#include "tabular/synthesizer.hpp"
#include "toy/toy.hpp"

namespace hybridsynth::pipeline {

namespace fs = std::filesystem;

// Default values of every configurable section for a preset ("paper" or
// "desk"): agan, pretrain, synth, eval, prepare, toy, tsne.
nlohmann::json default_config(const std::string& preset);

// ---- toy corpus

void write_toy_corpus(const toy::ToySpec& spec, const fs::path& out_dir);

// ---- prepare: filter, split, impute, resize

struct PrepareOptions {
  double missing_threshold = 0.05;
  std::string id_column = "id";
  std::vector<std::string> drop;
  std::vector<std::string> force_categorical;
  int image_size = 32;
  std::array<double, 3> ratios{6, 2, 2};

  static PrepareOptions from_json(const nlohmann::json& j);
};
nlohmann::json to_json(const PrepareOptions& o);

// A prepared directory holds records.csv, images/, schema.json, split.json,
// imputer.json and manifest.json.
struct PreparedCorpus {
  Corpus corpus;
  DatasetSplit split;
  ImputationModel imputer;

  std::vector<HybridRecord> train_val() const;
  std::vector<HybridRecord> test() const;
};

// The raw directory holds records.csv and images/{id}.png; an optional
// schema.json there fixes variable kinds and category order.
GenerationManifest prepare_corpus(const fs::path& raw_dir, const fs::path& out_dir,
                                  const PrepareOptions& options, std::uint64_t master_seed);
PreparedCorpus load_prepared(const fs::path& dir);
TableSchema load_prepared_schema(const fs::path& dir);

// ---- alpha-GAN pretraining

// Every *.png below `dir` (sorted by path), resized to `image_size`.
std::vector<Image> load_image_folder(const fs::path& dir, int image_size);

GenerationManifest pretrain_stage(agan::AGanModel& model, const fs::path& image_dir, long steps,
                                  std::uint64_t master_seed, const fs::path& loss_log);

// ---- encode / fit / sample / unmatched / decode

// Encodes the training and validation records only.
GenerationManifest encode_stage(const agan::AGanModel& model, const fs::path& prepared_dir,
                                const fs::path& out_csv);

GenerationManifest fit_stage(tabular::TabularSynthesizer& synth, const fs::path& encoded_csv,
                             const fs::path& prepared_dir, const fs::path& epoch_log);

GenerationManifest sample_stage(const tabular::TabularSynthesizer& synth, std::size_t n,
                                std::uint64_t master_seed, const fs::path& out_csv,
                                const fs::path& reference_csv = {});

GenerationManifest unmatched_stage(const fs::path& sds_csv, const fs::path& prepared_dir,
                                   std::uint64_t master_seed, const fs::path& out_csv);

GenerationManifest decode_stage(const agan::AGanModel& model, const fs::path& encoded_csv,
                                const fs::path& prepared_dir, const fs::path& out_dir);

// ---- evaluation

struct EvaluationPlan {
  // pds, sds1, sds5, uds1. uds* scenarios only run image tasks.
  std::vector<std::string> scenarios{"pds", "sds1", "sds5", "uds1"};
  std::vector<eval::TaskSpec> tasks;  // both feature sources listed separately
};

// Tasks of the chest radiograph study when the schema has them, the toy
// targets otherwise; each target runs on non-image and image features.
std::vector<eval::TaskSpec> default_tasks(const TableSchema& schema);

// Parses a comma-separated target list; kinds come from the schema and
// classification tasks exclude the missing token.
std::vector<eval::TaskSpec> tasks_from_names(const std::string& names, const TableSchema& schema);

// Synthetic scenarios draw a fresh sample per repeat; uds<k> is the
// unmatched version of the sds<k> sample of the same repeat.
std::vector<eval::EvalResult> run_evaluation(const PreparedCorpus& data,
                                             const agan::AGanModel& model,
                                             const tabular::TabularSynthesizer& synth,
                                             const eval::EvalConfig& config,
                                             const EvaluationPlan& plan, std::uint64_t master_seed);

GenerationManifest evaluate_stage(const agan::AGanModel& model,
                                  const tabular::TabularSynthesizer& synth,
                                  const fs::path& prepared_dir, const nlohmann::json& eval_json,
                                  std::uint64_t master_seed, const fs::path& out_csv);

// ---- t-SNE

struct TsneOptions {
  std::size_t sample_n = 0;  // 0: rows of the smaller input
  eval::TsneParams params;

  static TsneOptions from_json(const nlohmann::json& j);
};
nlohmann::json to_json(const TsneOptions& o);

// Embeds sample_n rows of each file; `mixing` receives the overlap score.
GenerationManifest tsne_stage(const fs::path& first_csv, const fs::path& second_csv,
                              const fs::path& prepared_dir, const TsneOptions& options,
                              std::uint64_t master_seed, const fs::path& out_csv,
                              const fs::path& out_png, double* mixing = nullptr);

// `<file>.manifest.json` beside a file output.
fs::path manifest_path_for(const fs::path& output);

}  // namespace hybridsynth::pipeline
