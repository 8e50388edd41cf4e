#pragma once

#include <span>
#include <vector>

#include "nn/tensor.hpp"

namespace hybridsynth::nn {

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d(value)/d(input), same shape as the input
};

// Mean binary cross-entropy on logits against a constant target.
LossResult bce_with_logits(const Tensor& logits, float target);
// Mean binary cross-entropy on logits against per-element targets.
LossResult bce_with_logits(const Tensor& logits, std::span<const float> targets);
// Mean absolute error over all elements.
LossResult l1(const Tensor& prediction, const Tensor& target);
LossResult l1(const Tensor& prediction, std::span<const float> targets);

bool all_finite(const Tensor& t);

}  // namespace hybridsynth::nn
