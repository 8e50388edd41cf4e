#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eval/gbdt.hpp"
#include "eval/image_model.hpp"
#include "schema/ingest.hpp"

namespace hybridsynth::eval {

enum class TaskKind { Classification, Regression };
enum class FeatureSource { NonImage, Image };

const char* to_string(FeatureSource s);

struct TaskSpec {
  std::string target;
  TaskKind kind = TaskKind::Classification;
  FeatureSource source = FeatureSource::NonImage;
  // Rows whose target is one of these levels are dropped from train and test.
  std::vector<std::string> excluded_levels;
  // Classification: the level scored as 1. Empty picks the last remaining
  // schema category.
  std::string positive_level;

  const char* metric() const { return kind == TaskKind::Classification ? "auroc" : "mae"; }
};

struct EvalConfig {
  GbdtParams tree;
  ImageTrainParams image;
  int repeats = 5;
  double ci_level = 0.95;

  static EvalConfig paper();
  static EvalConfig desk();
  static EvalConfig preset(const std::string& name);
  void validate() const;
};

nlohmann::json to_json(const EvalConfig& c);
// Keys absent from `j` keep the values of `base`.
EvalConfig eval_config_from_json(const nlohmann::json& j, const EvalConfig& base = {});

// Records plus a role tag. Only Test datasets may be passed as the test
// argument and they are refused as training data.
enum class DataRole { Train, Test };

struct EvalDataset {
  std::string name;
  DataRole role = DataRole::Train;
  TableSchema schema;  // clinical schema
  std::vector<HybridRecord> records;
};

struct EvalResult {
  std::string scenario;
  std::string task;
  FeatureSource source = FeatureSource::NonImage;
  std::string metric;
  double value = 0.0;
  std::vector<double> repeat_values;
  double ci_low = 0.0, ci_high = 0.0;
  std::vector<std::uint64_t> seeds;
};

// Called once per repeat; may return a freshly resampled training set.
using TrainProvider = std::function<EvalDataset(int repeat, std::uint64_t seed)>;

// Ids of every training row a model saw, for leakage audits.
struct TrainingAudit {
  std::vector<std::string> ids;
};

// One metric value: train on `train`, score on `test`.
double run_once(const EvalDataset& train, const EvalDataset& test, const TaskSpec& task,
                const EvalConfig& config, std::uint64_t seed, TrainingAudit* audit = nullptr);

EvalResult run_task(const TrainProvider& train, const EvalDataset& test, const TaskSpec& task,
                    const EvalConfig& config, const std::vector<std::uint64_t>& seeds,
                    const std::string& scenario, TrainingAudit* audit = nullptr);

EvalResult run_task(const EvalDataset& train, const EvalDataset& test, const TaskSpec& task,
                    const EvalConfig& config, const std::vector<std::uint64_t>& seeds,
                    const std::string& scenario, TrainingAudit* audit = nullptr);

// Mean of the repeat values with a Student-t interval (degenerate when
// there is a single repeat).
EvalResult summarize(const std::string& scenario, const TaskSpec& task,
                     std::vector<double> repeat_values, std::vector<std::uint64_t> seeds,
                     double ci_level);

std::vector<std::uint64_t> repeat_seeds(std::uint64_t base, int repeats);

// scenario,task,feature_source,metric,value,ci_low,ci_high,repeats,seed_list
void write_results_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results);

}  // namespace hybridsynth::eval
