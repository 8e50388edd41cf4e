#include "eval/harness.hpp"

#include <algorithm>
#include <limits>
#include <tuple>
#include <stdexcept>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "eval/metrics.hpp"

namespace hybridsynth::eval {

const char* to_string(FeatureSource s) { return s == FeatureSource::Image ? "image" : "non-image"; }

EvalConfig EvalConfig::paper() {
  EvalConfig c;
  c.image.arch = ImageArch::ResNet50;
  return c;
}

EvalConfig EvalConfig::desk() {
  EvalConfig c;
  c.image.arch = ImageArch::SmallCnn;
  c.image.max_epochs = 40;
  c.image.patience = 5;
  c.image.learning_rate = 1e-3f;
  return c;
}

EvalConfig EvalConfig::preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
}

void EvalConfig::validate() const {
  if (repeats < 1) throw std::invalid_argument("eval repeats must be >= 1");
  if (!(ci_level > 0 && ci_level < 1)) throw std::invalid_argument("eval ci_level must be in (0, 1)");
  if (image.max_epochs < 1 || image.patience < 1 || image.batch_size < 2)
    throw std::invalid_argument("eval image: max_epochs, patience >= 1 and batch_size >= 2");
  if (tree.boost_rounds < 1) throw std::invalid_argument("eval tree: boost_rounds must be >= 1");
}

nlohmann::json to_json(const EvalConfig& c) {
  return {
      {"repeats", c.repeats},
      {"ci_level", c.ci_level},
      {"tree_boost_rounds", c.tree.boost_rounds},
      {"tree_early_stopping_rounds", c.tree.early_stopping_rounds},
      {"tree_learning_rate", c.tree.learning_rate},
      {"tree_max_depth", c.tree.max_depth},
      {"tree_num_leaves", c.tree.num_leaves},
      {"tree_min_data_in_leaf", c.tree.min_data_in_leaf},
      {"tree_goss", c.tree.goss},
      {"image_model", to_string(c.image.arch)},
      {"image_max_epochs", c.image.max_epochs},
      {"image_patience", c.image.patience},
      {"image_batch_size", c.image.batch_size},
      {"image_learning_rate", c.image.learning_rate},
      {"image_augment", c.image.augment},
      {"image_valid_fraction", c.image.valid_fraction},
  };
}

EvalConfig eval_config_from_json(const nlohmann::json& j, const EvalConfig& base) {
  EvalConfig c = base;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("repeats", c.repeats);
  get("ci_level", c.ci_level);
  get("tree_boost_rounds", c.tree.boost_rounds);
  get("tree_early_stopping_rounds", c.tree.early_stopping_rounds);
  get("tree_learning_rate", c.tree.learning_rate);
  get("tree_max_depth", c.tree.max_depth);
  get("tree_num_leaves", c.tree.num_leaves);
  get("tree_min_data_in_leaf", c.tree.min_data_in_leaf);
  get("tree_goss", c.tree.goss);
  if (j.contains("image_model")) c.image.arch = parse_image_arch(j.at("image_model").get<std::string>());
  get("image_max_epochs", c.image.max_epochs);
  get("image_patience", c.image.patience);
  get("image_batch_size", c.image.batch_size);
  get("image_learning_rate", c.image.learning_rate);
  get("image_augment", c.image.augment);
  get("image_valid_fraction", c.image.valid_fraction);
  c.validate();
  return c;
}

namespace {

struct Prepared {
  std::vector<const HybridRecord*> rows;
  std::vector<double> y;
};

// Target values after excluded levels and missing targets are dropped.
Prepared prepare(const EvalDataset& data, const TaskSpec& task) {
  const auto idx = data.schema.index_of(task.target);
  if (!idx) throw DataError("task target '" + task.target + "' is not in dataset " + data.name);
  const VariableSpec& spec = data.schema.at(*idx);
  const bool classification = task.kind == TaskKind::Classification;
  if (classification != spec.is_categorical())
    throw DataError("task target '" + task.target + "' has the wrong kind for a " +
                    (classification ? "classification" : "regression") + " task");

  std::string positive = task.positive_level;
  if (classification && positive.empty()) {
    for (const auto& c : spec.categories)
      if (std::find(task.excluded_levels.begin(), task.excluded_levels.end(), c) ==
          task.excluded_levels.end())
        positive = c;
  }

  Prepared p;
  for (const auto& rec : data.records) {
    auto it = rec.clinical.find(task.target);
    if (it == rec.clinical.end()) throw DataError("record " + rec.id + " lacks '" + task.target + "'");
    const Value& v = it->second;
    if (classification) {
      const std::string text = is_missing(v) ? std::string(kMissingToken) : value_to_text(v);
      if (std::find(task.excluded_levels.begin(), task.excluded_levels.end(), text) !=
          task.excluded_levels.end())
        continue;
      p.rows.push_back(&rec);
      p.y.push_back(text == positive ? 1.0 : 0.0);
    } else {
      const auto* d = std::get_if<double>(&v);
      if (!d) continue;
      p.rows.push_back(&rec);
      p.y.push_back(*d);
    }
  }
  return p;
}

FeatureMatrix clinical_features(const Prepared& p, const TableSchema& schema,
                                const std::string& target) {
  std::size_t width = 0;
  for (const auto& v : schema.variables()) {
    if (v.name == target) continue;
    width += v.is_categorical() ? v.categories.size() : 1;
  }
  FeatureMatrix x(p.rows.size(), width);
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    std::size_t col = 0;
    for (const auto& v : schema.variables()) {
      if (v.name == target) continue;
      const Value& cell = p.rows[r]->clinical.at(v.name);
      if (v.is_categorical()) {
        const std::string text = is_missing(cell) ? std::string(kMissingToken) : value_to_text(cell);
        if (auto k = v.category_index(text)) x.at(r, col + *k) = 1.0;
        col += v.categories.size();
      } else {
        const auto* d = std::get_if<double>(&cell);
        x.at(r, col) = d ? *d : std::numeric_limits<double>::quiet_NaN();
        ++col;
      }
    }
  }
  return x;
}

std::vector<Image> images_of(const Prepared& p) {
  std::vector<Image> out;
  out.reserve(p.rows.size());
  for (const auto* r : p.rows) out.push_back(r->image);
  return out;
}

}  // namespace

double run_once(const EvalDataset& train, const EvalDataset& test, const TaskSpec& task,
                const EvalConfig& config, std::uint64_t seed, TrainingAudit* audit) {
  if (train.role == DataRole::Test)
    throw std::invalid_argument("evaluation: dataset '" + train.name + "' is a test set");
  if (test.role != DataRole::Test)
    throw std::invalid_argument("evaluation: dataset '" + test.name + "' is not tagged as test");
  if (!(train.schema == test.schema))
    throw DataError("evaluation: train and test clinical schemas differ");

  const Prepared tr = prepare(train, task), te = prepare(test, task);
  if (tr.rows.empty() || te.rows.empty())
    throw DataError("evaluation: no usable rows for target '" + task.target + "'");
  if (audit)
    for (const auto* r : tr.rows) audit->ids.push_back(r->id);

  const bool classification = task.kind == TaskKind::Classification;
  const Objective objective = classification ? Objective::Binary : Objective::Regression;
  if (classification) {
    const auto pos = std::count(tr.y.begin(), tr.y.end(), 1.0);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(tr.y.size()))
      throw DataError("evaluation: training labels for '" + task.target + "' are a single class");
  }

  std::vector<double> predictions;
  if (task.source == FeatureSource::NonImage) {
    const FeatureMatrix x = clinical_features(tr, train.schema, task.target);
    // Early stopping uses a held-out quarter of the training rows.
    Rng rng(derive_seed(seed, 1));
    std::vector<std::size_t> perm = permutation(tr.rows.size(), rng);
    const std::size_t n_valid = std::max<std::size_t>(1, tr.rows.size() / 4);
    FeatureMatrix xf(tr.rows.size() - n_valid, x.cols), xv(n_valid, x.cols);
    std::vector<double> yf, yv;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const bool valid = i < n_valid;
      FeatureMatrix& dst = valid ? xv : xf;
      const std::size_t r = valid ? i : i - n_valid;
      std::copy_n(x.row(perm[i]), x.cols, dst.values.data() + r * x.cols);
      (valid ? yv : yf).push_back(tr.y[perm[i]]);
    }
    GbdtParams params = config.tree;
    params.objective = objective;
    const Gbdt model = Gbdt::train(xf, yf, params, seed, &xv, &yv);
    predictions = model.predict(clinical_features(te, test.schema, task.target));
  } else {
    const ImageModel model = ImageModel::train(images_of(tr), tr.y, objective, config.image, seed);
    predictions = model.predict(images_of(te));
  }

  if (classification) {
    std::vector<int> labels(te.y.begin(), te.y.end());
    return auroc(predictions, labels);
  }
  return mae(predictions, te.y);
}

EvalResult summarize(const std::string& scenario, const TaskSpec& task,
                     std::vector<double> repeat_values, std::vector<std::uint64_t> seeds,
                     double ci_level) {
  if (repeat_values.empty()) throw std::invalid_argument("summarize: no repeat values");
  EvalResult r;
  r.scenario = scenario;
  r.task = task.target;
  r.source = task.source;
  r.metric = task.metric();
  r.value = mean(repeat_values);
  if (repeat_values.size() >= 2) {
    std::tie(r.ci_low, r.ci_high) = confidence_interval(repeat_values, ci_level);
  } else {
    r.ci_low = r.ci_high = r.value;
  }
  r.repeat_values = std::move(repeat_values);
  r.seeds = std::move(seeds);
  return r;
}

EvalResult run_task(const TrainProvider& train, const EvalDataset& test, const TaskSpec& task,
                    const EvalConfig& config, const std::vector<std::uint64_t>& seeds,
                    const std::string& scenario, TrainingAudit* audit) {
  if (seeds.empty()) throw std::invalid_argument("run_task: no repeat seeds");
  std::vector<double> values;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const EvalDataset data = train(static_cast<int>(i), seeds[i]);
    values.push_back(run_once(data, test, task, config, seeds[i], audit));
  }
  return summarize(scenario, task, std::move(values), seeds, config.ci_level);
}

EvalResult run_task(const EvalDataset& train, const EvalDataset& test, const TaskSpec& task,
                    const EvalConfig& config, const std::vector<std::uint64_t>& seeds,
                    const std::string& scenario, TrainingAudit* audit) {
  return run_task([&](int, std::uint64_t) { return train; }, test, task, config, seeds, scenario,
                  audit);
}

std::vector<std::uint64_t> repeat_seeds(std::uint64_t base, int repeats) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < repeats; ++i) out.push_back(derive_seed(base, static_cast<std::uint64_t>(i)));
  return out;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results) {
  csv::Document doc;
  doc.header = {"scenario", "task",    "feature_source", "metric",   "value",
                "ci_low",   "ci_high", "repeats",        "seed_list"};
  for (const auto& r : results) {
    std::string seeds;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      if (i) seeds += ';';
      seeds += std::to_string(r.seeds[i]);
    }
    doc.rows.push_back({r.scenario, r.task, to_string(r.source), r.metric,
                        csv::format_double(r.value), csv::format_double(r.ci_low),
                        csv::format_double(r.ci_high), std::to_string(r.repeat_values.size()),
                        seeds});
  }
  csv::write_file(path, doc);
}

}  // namespace hybridsynth::eval
