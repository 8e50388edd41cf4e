#include "pipeline/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "common/csv.hpp"
#include "common/digest.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace hybridsynth::pipeline {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  auto flush = [&] {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    item.clear();
  };
  for (char c : text) {
    if (c == ',') flush();
    else item += c;
  }
  flush();
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

GenerationManifest start(const std::string& stage) {
  GenerationManifest m;
  m.stage = stage;
  m.timestamp = GenerationManifest::now();
  return m;
}

}  // namespace

fs::path manifest_path_for(const fs::path& output) {
  if (output.has_extension()) {
    fs::path p = output;
    return p.replace_extension(".manifest.json");
  }
  return output / "manifest.json";
}

nlohmann::json default_config(const std::string& preset) {
  if (preset != "paper" && preset != "desk")
    throw std::invalid_argument("unknown preset '" + preset + "' (expected paper or desk)");
  const bool paper = preset == "paper";

  PrepareOptions prepare;
  prepare.image_size = paper ? 256 : 32;
  nlohmann::json eval = to_json(eval::EvalConfig::preset(preset));
  eval["tasks"] = "auto";
  eval["scenarios"] = "pds,sds1,sds5,uds1";
  TsneOptions tsne;

  return {
      {"agan", to_json(agan::AGanConfig::preset(preset))},
      {"pretrain", {{"steps", paper ? 100000 : 2000}}},
      {"synth", to_json(tabular::SynthConfig::preset(preset))},
      {"sample", {{"n", 40000}}},
      {"eval", eval},
      {"prepare", to_json(prepare)},
      {"toy", {{"n", 1000}, {"image_size", 32}, {"missing_rate", 0.03}}},
      {"tsne", to_json(tsne)},
  };
}

// ------------------------------------------------------------------ toy

void write_toy_corpus(const toy::ToySpec& spec, const fs::path& out_dir) {
  const toy::ToyCorpus toy = toy::generate_toy_hybrid(spec);
  write_corpus(out_dir, toy.corpus);
  write_json(out_dir / "schema.json", to_json(toy.corpus.schema));

  csv::Document truth;
  truth.header = {"id", "area_fraction", "foreground", "mean_brightness"};
  for (std::size_t i = 0; i < toy.truth.size(); ++i) {
    const auto& t = toy.truth[i];
    truth.rows.push_back({toy.corpus.records[i].id, csv::format_double(t.area_fraction),
                          csv::format_double(t.foreground), csv::format_double(t.mean_brightness)});
  }
  csv::write_file(out_dir / "truth.csv", truth);

  GenerationManifest m = start("toygen");
  m.seeds["toy"] = spec.seed;
  m.counts["records"] = toy.corpus.records.size();
  m.counts["image_size"] = static_cast<std::uint64_t>(spec.image_size);
  m.write(out_dir / "manifest.json");
}

// ------------------------------------------------------------------ prepare

PrepareOptions PrepareOptions::from_json(const nlohmann::json& j) {
  PrepareOptions o;
  o.missing_threshold = j.value("missing_threshold", o.missing_threshold);
  o.id_column = j.value("id_column", o.id_column);
  o.drop = split_list(j.value("drop", std::string()));
  o.force_categorical = split_list(j.value("force_categorical", std::string()));
  o.image_size = j.value("image_size", o.image_size);
  if (j.contains("split_ratios")) {
    const auto r = split_list(j.at("split_ratios").get<std::string>());
    if (r.size() != 3) throw std::invalid_argument("prepare.split_ratios needs three values");
    for (int i = 0; i < 3; ++i) o.ratios[i] = std::stod(r[i]);
  }
  return o;
}

nlohmann::json to_json(const PrepareOptions& o) {
  std::vector<std::string> ratios;
  for (double r : o.ratios) ratios.push_back(csv::format_double(r));
  return {{"missing_threshold", o.missing_threshold},
          {"id_column", o.id_column},
          {"drop", join_list(o.drop)},
          {"force_categorical", join_list(o.force_categorical)},
          {"image_size", o.image_size},
          {"split_ratios", join_list(ratios)}};
}

std::vector<HybridRecord> PreparedCorpus::train_val() const {
  return corpus.subset(split.train_val_ids());
}

std::vector<HybridRecord> PreparedCorpus::test() const { return corpus.subset(split.test_ids); }

GenerationManifest prepare_corpus(const fs::path& raw_dir, const fs::path& out_dir,
                                  const PrepareOptions& options, std::uint64_t master_seed) {
  const fs::path records_csv = raw_dir / "records.csv";
  const csv::Document raw = csv::read_file(records_csv);

  FilterOptions filter;
  filter.missing_threshold = options.missing_threshold;
  filter.id_column = options.id_column;
  filter.drop = options.drop;
  filter.force_categorical = options.force_categorical;
  TableSchema schema = filter_variables(raw, filter);

  // A schema file fixes kinds and category order; the filter still decides
  // which variables survive.
  if (fs::exists(raw_dir / "schema.json")) {
    const TableSchema declared = schema_from_json(read_json(raw_dir / "schema.json"));
    std::vector<VariableSpec> kept;
    for (const auto& v : declared.variables())
      if (schema.contains(v.name)) kept.push_back(v);
    schema = TableSchema(std::move(kept));
  }

  Corpus corpus = load_corpus(records_csv, raw_dir / "images", schema, options.id_column);
  const std::uint64_t split_seed = stage_seed(master_seed, Stage::Split);
  const DatasetSplit split = split_dataset(corpus.ids(), options.ratios, split_seed);
  const ImputationModel imputer = fit_imputer(corpus.subset(split.train_val_ids()), schema);
  for (auto& rec : corpus.records) {
    rec = apply_imputer(rec, imputer, schema);
    rec.image = resize_image(rec.image, options.image_size);
  }

  write_corpus(out_dir, corpus);
  write_json(out_dir / "schema.json", to_json(schema));
  write_json(out_dir / "split.json", to_json(split));
  write_json(out_dir / "imputer.json", to_json(imputer));

  GenerationManifest m = start("prepare");
  m.seeds["split"] = split_seed;
  m.digests["records.csv"] = file_digest(records_csv);
  m.counts["train"] = split.train_ids.size();
  m.counts["val"] = split.val_ids.size();
  m.counts["test"] = split.test_ids.size();
  m.counts["variables"] = schema.size();
  m.counts["image_size"] = static_cast<std::uint64_t>(options.image_size);
  return m;
}

TableSchema load_prepared_schema(const fs::path& dir) {
  return schema_from_json(read_json(dir / "schema.json"));
}

PreparedCorpus load_prepared(const fs::path& dir) {
  PreparedCorpus p;
  const TableSchema schema = load_prepared_schema(dir);
  p.corpus = load_corpus(dir / "records.csv", dir / "images", schema, "id");
  p.split = split_from_json(read_json(dir / "split.json"));
  p.imputer = imputer_from_json(read_json(dir / "imputer.json"));
  return p;
}

// ------------------------------------------------------------------ agan

std::vector<Image> load_image_folder(const fs::path& dir, int image_size) {
  if (!fs::is_directory(dir)) throw DataError("image folder " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  if (files.empty()) throw DataError("no .png files below " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    Image im = png::read(f);
    if (im.height != image_size || im.width != image_size) im = resize_image(im, image_size);
    images.push_back(std::move(im));
  }
  return images;
}

GenerationManifest pretrain_stage(agan::AGanModel& model, const fs::path& image_dir, long steps,
                                  std::uint64_t master_seed, const fs::path& loss_log) {
  const std::vector<Image> images = load_image_folder(image_dir, model.config().image_size);
  const std::uint64_t seed = stage_seed(master_seed, Stage::AganTrain);
  const auto log = agan::pretrain(model, images, steps, seed);
  if (!loss_log.empty()) agan::write_loss_log(loss_log, log);

  GenerationManifest m = start("pretrain-agan");
  m.seeds["agan_train"] = seed;
  m.counts["images"] = images.size();
  m.counts["steps"] = static_cast<std::uint64_t>(steps);
  m.counts["training_steps_total"] = static_cast<std::uint64_t>(model.training_steps());
  return m;
}

// ------------------------------------------------------------------ tables

GenerationManifest encode_stage(const agan::AGanModel& model, const fs::path& prepared_dir,
                                const fs::path& out_csv) {
  const PreparedCorpus data = load_prepared(prepared_dir);
  const EncodedDataset enc = encode_dataset(model, data.train_val(), data.corpus.schema);
  write_encoded(out_csv, enc);

  GenerationManifest m = start("encode");
  m.digests["records.csv"] = file_digest(prepared_dir / "records.csv");
  m.counts["rows"] = enc.rows();
  m.counts["latent_dim"] = static_cast<std::uint64_t>(enc.latent_dim);
  return m;
}

GenerationManifest fit_stage(tabular::TabularSynthesizer& synth, const fs::path& encoded_csv,
                             const fs::path& prepared_dir, const fs::path& epoch_log) {
  const TableSchema clinical = load_prepared_schema(prepared_dir);
  const EncodedDataset enc = read_encoded(encoded_csv, clinical, Provenance::RealEncoded);
  const auto log = synth.fit(enc.table);
  if (!epoch_log.empty()) tabular::write_epoch_log(epoch_log, log);

  GenerationManifest m = start("fit-tabular");
  m.seeds["synth_train"] = synth.seed();
  m.digests[encoded_csv.filename().string()] = file_digest(encoded_csv);
  m.counts["rows"] = enc.rows();
  m.counts["epochs"] = static_cast<std::uint64_t>(synth.epochs_done());
  return m;
}

GenerationManifest sample_stage(const tabular::TabularSynthesizer& synth, std::size_t n,
                                std::uint64_t master_seed, const fs::path& out_csv,
                                const fs::path& reference_csv) {
  if (!reference_csv.empty()) {
    const csv::Document ref = csv::read_file(reference_csv);
    if (ref.header != synth.schema().names())
      throw DataError("sample: header of " + reference_csv.string() +
                      " does not match the synthesizer's training header");
  }
  const std::uint64_t seed = stage_seed(master_seed, Stage::Sample);
  const EncodedDataset sds = generate_sds(synth, n, seed);
  write_encoded(out_csv, sds);

  GenerationManifest m = start("sample");
  m.seeds["sample"] = seed;
  m.counts["rows"] = n;
  return m;
}

GenerationManifest unmatched_stage(const fs::path& sds_csv, const fs::path& prepared_dir,
                                   std::uint64_t master_seed, const fs::path& out_csv) {
  const TableSchema clinical = load_prepared_schema(prepared_dir);
  const EncodedDataset sds = read_encoded(sds_csv, clinical, Provenance::Synthetic);
  const std::uint64_t seed = stage_seed(master_seed, Stage::Unmatched);
  write_encoded(out_csv, make_unmatched(sds, seed));

  GenerationManifest m = start("make-unmatched");
  m.seeds["unmatched"] = seed;
  m.digests[sds_csv.filename().string()] = file_digest(sds_csv);
  m.counts["rows"] = sds.rows();
  return m;
}

GenerationManifest decode_stage(const agan::AGanModel& model, const fs::path& encoded_csv,
                                const fs::path& prepared_dir, const fs::path& out_dir) {
  const TableSchema clinical = load_prepared_schema(prepared_dir);
  const EncodedDataset enc = read_encoded(encoded_csv, clinical, Provenance::Synthetic);
  Corpus corpus;
  corpus.schema = clinical;
  corpus.records = decode_dataset(model, enc);
  write_corpus(out_dir, corpus);
  write_json(out_dir / "schema.json", to_json(clinical));

  GenerationManifest m = start("decode");
  m.digests[encoded_csv.filename().string()] = file_digest(encoded_csv);
  m.counts["records"] = corpus.records.size();
  return m;
}

// ------------------------------------------------------------------ evaluation

std::vector<eval::TaskSpec> tasks_from_names(const std::string& names, const TableSchema& schema) {
  std::vector<eval::TaskSpec> out;
  for (const auto& name : split_list(names)) {
    const VariableSpec& v = schema.find(name);
    for (auto source : {eval::FeatureSource::NonImage, eval::FeatureSource::Image}) {
      eval::TaskSpec t;
      t.target = name;
      t.source = source;
      if (v.is_categorical()) {
        t.kind = eval::TaskKind::Classification;
        t.excluded_levels = {kMissingToken};
      } else {
        t.kind = eval::TaskKind::Regression;
      }
      out.push_back(std::move(t));
    }
  }
  if (out.empty()) throw std::invalid_argument("evaluation task list is empty");
  return out;
}

std::vector<eval::TaskSpec> default_tasks(const TableSchema& schema) {
  if (schema.contains("Last Status"))
    return tasks_from_names("Last Status,Gender Concept Name,Oral Temperature,Oxygen Saturation",
                            schema);
  if (schema.contains(toy::kShadeClass))
    return tasks_from_names(std::string(toy::kShadeClass) + "," + toy::kSizeScore, schema);
  throw DataError("no default evaluation tasks for this schema; set eval.tasks");
}

namespace {

struct Scenario {
  std::string name;
  bool synthetic = false;
  bool unmatched = false;
  int multiple = 1;
  std::uint64_t seed_slot = 0;
};

Scenario parse_scenario(const std::string& s) {
  Scenario sc;
  sc.name = s;
  if (s == "pds") {
    sc.seed_slot = 1;
    return sc;
  }
  if ((s.rfind("sds", 0) == 0 || s.rfind("uds", 0) == 0) && s.size() > 3) {
    sc.synthetic = true;
    sc.unmatched = s[0] == 'u';
    try {
      std::size_t used = 0;
      sc.multiple = std::stoi(s.substr(3), &used);
      if (used != s.size() - 3 || sc.multiple < 1) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad scenario '" + s + "'");
    }
    // uds<k> shares seeds with sds<k> so it is the shuffled twin of that sample.
    sc.seed_slot = 100 + static_cast<std::uint64_t>(sc.multiple);
    return sc;
  }
  throw std::invalid_argument("unknown scenario '" + s + "' (pds, sds<k>, uds<k>)");
}

}  // namespace

std::vector<eval::EvalResult> run_evaluation(const PreparedCorpus& data,
                                             const agan::AGanModel& model,
                                             const tabular::TabularSynthesizer& synth,
                                             const eval::EvalConfig& config,
                                             const EvaluationPlan& plan,
                                             std::uint64_t master_seed) {
  config.validate();
  const TableSchema& clinical = data.corpus.schema;
  const TableSchema expected = encoded_schema(model.config().latent_dim, clinical);
  if (!(synth.schema() == expected))
    throw DataError("evaluate: synthesizer header does not match the prepared corpus and alpha-GAN");

  const std::vector<HybridRecord> train_val = data.train_val();
  eval::EvalDataset test{"pds-test", eval::DataRole::Test, clinical, data.test()};
  if (!test.records.empty() && test.records.front().image.height != model.config().image_size)
    throw DataError("evaluate: prepared images do not match the alpha-GAN image size");

  const std::uint64_t eval_seed = stage_seed(master_seed, Stage::Evaluate);
  std::map<std::pair<std::size_t, std::size_t>, eval::EvalResult> cells;  // (task, scenario)

  for (std::size_t s = 0; s < plan.scenarios.size(); ++s) {
    const Scenario sc = parse_scenario(plan.scenarios[s]);
    std::vector<std::size_t> tasks;
    for (std::size_t t = 0; t < plan.tasks.size(); ++t)
      if (!sc.unmatched || plan.tasks[t].source == eval::FeatureSource::Image) tasks.push_back(t);
    if (tasks.empty()) continue;

    const auto seeds = eval::repeat_seeds(derive_seed(eval_seed, sc.seed_slot), config.repeats);
    std::vector<std::vector<double>> values(plan.tasks.size());
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      eval::EvalDataset train{sc.name, eval::DataRole::Train, clinical, {}};
      if (!sc.synthetic) {
        train.records = train_val;
      } else {
        EncodedDataset sds = generate_sds(synth, sc.multiple * train_val.size(),
                                          derive_seed(seeds[r], 1), &expected);
        if (sc.unmatched) sds = make_unmatched(sds, derive_seed(seeds[r], 2));
        train.records = decode_dataset(model, sds);
      }
      for (std::size_t t : tasks)
        values[t].push_back(eval::run_once(train, test, plan.tasks[t], config,
                                           derive_seed(seeds[r], 16 + t)));
    }
    for (std::size_t t : tasks)
      cells.emplace(std::make_pair(t, s), eval::summarize(sc.name, plan.tasks[t],
                                                          std::move(values[t]), seeds,
                                                          config.ci_level));
  }

  std::vector<eval::EvalResult> out;
  for (auto& [key, result] : cells) out.push_back(std::move(result));
  return out;
}

GenerationManifest evaluate_stage(const agan::AGanModel& model,
                                  const tabular::TabularSynthesizer& synth,
                                  const fs::path& prepared_dir, const nlohmann::json& eval_json,
                                  std::uint64_t master_seed, const fs::path& out_csv) {
  const PreparedCorpus data = load_prepared(prepared_dir);
  const eval::EvalConfig config = eval::eval_config_from_json(eval_json);
  EvaluationPlan plan;
  const std::string tasks = eval_json.value("tasks", std::string("auto"));
  plan.tasks = tasks == "auto" ? default_tasks(data.corpus.schema)
                               : tasks_from_names(tasks, data.corpus.schema);
  if (eval_json.contains("scenarios"))
    plan.scenarios = split_list(eval_json.at("scenarios").get<std::string>());

  const auto results = run_evaluation(data, model, synth, config, plan, master_seed);
  eval::write_results_csv(out_csv, results);

  GenerationManifest m = start("evaluate");
  m.seeds["evaluate"] = stage_seed(master_seed, Stage::Evaluate);
  m.digests["records.csv"] = file_digest(prepared_dir / "records.csv");
  m.counts["results"] = results.size();
  m.counts["repeats"] = static_cast<std::uint64_t>(config.repeats);
  return m;
}

// ------------------------------------------------------------------ t-SNE

TsneOptions TsneOptions::from_json(const nlohmann::json& j) {
  TsneOptions o;
  o.sample_n = j.value("sample_n", o.sample_n);
  o.params.perplexity = j.value("perplexity", o.params.perplexity);
  o.params.iterations = j.value("iterations", o.params.iterations);
  o.params.early_exaggeration = j.value("early_exaggeration", o.params.early_exaggeration);
  o.params.exaggeration_iterations =
      j.value("exaggeration_iterations", o.params.exaggeration_iterations);
  o.params.learning_rate = j.value("learning_rate", o.params.learning_rate);
  return o;
}

nlohmann::json to_json(const TsneOptions& o) {
  return {{"sample_n", o.sample_n},
          {"perplexity", o.params.perplexity},
          {"iterations", o.params.iterations},
          {"early_exaggeration", o.params.early_exaggeration},
          {"exaggeration_iterations", o.params.exaggeration_iterations},
          {"learning_rate", o.params.learning_rate}};
}

GenerationManifest tsne_stage(const fs::path& first_csv, const fs::path& second_csv,
                              const fs::path& prepared_dir, const TsneOptions& options,
                              std::uint64_t master_seed, const fs::path& out_csv,
                              const fs::path& out_png, double* mixing) {
  const TableSchema clinical = load_prepared_schema(prepared_dir);
  const Table a = read_encoded(first_csv, clinical, Provenance::RealEncoded).table;
  const Table b = read_encoded(second_csv, clinical, Provenance::Synthetic).table;
  const std::size_t n =
      options.sample_n ? options.sample_n : std::min(a.row_count(), b.row_count());
  const std::uint64_t seed = stage_seed(master_seed, Stage::Tsne);
  const eval::TsneOverlap result = eval::tsne_overlap(a, b, n, seed, options.params);
  eval::write_tsne_csv(out_csv, result, first_csv.stem().string(), second_csv.stem().string());
  if (!out_png.empty()) eval::write_scatter_png(out_png, result);
  if (mixing) *mixing = result.mixing;

  GenerationManifest m = start("tsne");
  m.seeds["tsne"] = seed;
  m.digests[first_csv.filename().string()] = file_digest(first_csv);
  m.digests[second_csv.filename().string()] = file_digest(second_csv);
  m.counts["points"] = result.points.size();
  return m;
}

}  // namespace hybridsynth::pipeline
