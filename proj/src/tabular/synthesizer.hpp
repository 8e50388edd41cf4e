#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "nn/layers.hpp"
#include "schema/table.hpp"
#include "tabular/cond.hpp"
#include "tabular/transform.hpp"

namespace hybridsynth::tabular {

struct SynthConfig {
  int epochs = 300;
  int batch_size = 500;
  int embedding_dim = 128;
  int generator_dim = 256;  // width of both residual blocks
  int critic_dim = 256;     // width of both critic layers
  int max_modes = 10;
  int pac = 10;             // rows packed into one critic sample
  int critic_steps = 1;
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.9f;
  float weight_decay = 1e-6f;
  float gp_weight = 10.0f;
  float gumbel_tau = 0.2f;
  float critic_dropout = 0.5f;
  float critic_slope = 0.2f;

  static SynthConfig paper();
  static SynthConfig desk();
  static SynthConfig preset(const std::string& name);
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;
  double loss_g = 0, loss_d = 0;
  // Fraction of generated rows whose conditioned block came out with the
  // requested value (argmax of the activated output).
  double cond_match = 0;
};

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log);

// Packed critic: Linear, LeakyReLU, Dropout twice, then a scalar head. Every
// non-linearity is piecewise linear, so its input gradient is a product of
// the weight matrices with the active slope/dropout masks, which is how the
// gradient penalty is computed and differentiated.
class Critic {
 public:
  Critic(int input_dim, const SynthConfig& config, Rng& init_rng);

  nn::Tensor forward(const nn::Tensor& x, Rng& rng);  // x: rows x input_dim
  nn::Tensor backward(const nn::Tensor& grad_out);
  nn::Tensor infer(const nn::Tensor& x) const;        // no dropout
  // Adds weight * mean((|dD/dx| - 1)^2) to the parameter gradients and
  // returns the penalty value.
  double gradient_penalty(const nn::Tensor& x, float weight, Rng& rng);

  nn::Sequential& parameters_root() { return root_; }

 private:
  // Slope times dropout factor for each pre-activation entry.
  nn::FloatBuffer draw_mask(const nn::Tensor& pre, Rng& rng) const;

  float slope_, dropout_;
  nn::Sequential root_;  // owns the three Linear layers, for bookkeeping
  nn::Linear* l1_;
  nn::Linear* l2_;
  nn::Linear* l3_;
  nn::FloatBuffer m1_, m2_;
};

class TabularSynthesizer {
 public:
  TabularSynthesizer(SynthConfig config, std::uint64_t seed);

  const SynthConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int epochs_done() const { return epochs_done_; }
  bool fitted() const { return fitted_; }
  const TableSchema& schema() const { return schema_; }
  const std::vector<ColumnTransform>& transforms() const { return transforms_; }
  const CondSampler& cond_sampler() const { return *cond_; }
  std::size_t data_width() const { return encoded_width(transforms_); }

  // Fits the column transforms, then trains. Throws NumericError on the
  // first non-finite loss.
  std::vector<EpochRecord> fit(const Table& table,
                               const std::function<void(const EpochRecord&)>& on_epoch = {});

  // n rows in the original column space. Reentrant for distinct rngs.
  Table sample(std::size_t n, Rng& rng) const;

  void save(const std::filesystem::path& path) const;
  static TabularSynthesizer load(const std::filesystem::path& path);

 private:
  void build(std::size_t data_dim, std::size_t cond_dim);
  // Output activation: tanh on alpha entries, Gumbel-softmax on one-hot blocks.
  nn::Tensor activate(const nn::Tensor& raw, Rng& rng) const;
  nn::Tensor activate_backward(const nn::Tensor& activated, const nn::Tensor& grad) const;

  SynthConfig config_;
  std::uint64_t seed_;
  bool fitted_ = false;
  TableSchema schema_;
  std::vector<ColumnTransform> transforms_;
  std::unique_ptr<CondSampler> cond_;
  std::unique_ptr<nn::Sequential> generator_;
  std::unique_ptr<Critic> critic_;
  int epochs_done_ = 0;
};

}  // namespace hybridsynth::tabular
