#pragma once

#include <vector>

#include "nn/tensor.hpp"

namespace hybridsynth::nn {

struct AdamOptions {
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.0f;  // L2 added to the gradient
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void zero_grad();
  void step();

  const AdamOptions& options() const { return options_; }
  void set_learning_rate(float lr) { options_.learning_rate = lr; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<std::vector<float>> m_, v_;
  long steps_ = 0;
};

}  // namespace hybridsynth::nn
