#include "nn/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridsynth::nn {
namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LossResult bce_with_logits(const Tensor& logits, std::span<const float> targets) {
  if (targets.size() != logits.numel())
    throw std::invalid_argument("bce_with_logits: target count mismatch");
  LossResult r;
  r.grad = Tensor(logits.shape);
  const double n = static_cast<double>(logits.numel());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    const double x = logits[i], t = targets[i];
    total += softplus(x) - t * x;
    r.grad[i] = static_cast<float>((sigmoid(x) - t) / n);
  }
  r.value = total / n;
  return r;
}

LossResult bce_with_logits(const Tensor& logits, float target) {
  return bce_with_logits(logits, std::vector<float>(logits.numel(), target));
}

LossResult l1(const Tensor& prediction, std::span<const float> targets) {
  if (targets.size() != prediction.numel()) throw std::invalid_argument("l1: size mismatch");
  LossResult r;
  r.grad = Tensor(prediction.shape);
  const double n = static_cast<double>(prediction.numel());
  double total = 0.0;
  for (std::size_t i = 0; i < prediction.numel(); ++i) {
    const double d = static_cast<double>(prediction[i]) - targets[i];
    total += std::abs(d);
    r.grad[i] = static_cast<float>((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n);
  }
  r.value = total / n;
  return r;
}

LossResult l1(const Tensor& prediction, const Tensor& target) {
  if (target.numel() != prediction.numel()) throw std::invalid_argument("l1: size mismatch");
  return l1(prediction, target.data);
}

bool all_finite(const Tensor& t) {
  for (float v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace hybridsynth::nn
