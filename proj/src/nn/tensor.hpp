#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hybridsynth::nn {

// Storage aligned to Eigen's maximum vector width. Eigen peels reductions
// and matrix-vector products at alignment boundaries, so a buffer whose
// alignment varied with heap layout would change rounding from run to run.
using FloatBuffer = std::vector<float, Eigen::aligned_allocator<float>>;

// Dense float tensor, row-major. The first axis is always the batch axis;
// image tensors are laid out N x C x H x W.
struct Tensor {
  std::vector<int> shape;
  FloatBuffer data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, float fill = 0.0f) : shape(std::move(s)) {
    data.assign(count(shape), fill);
  }

  static std::size_t count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }

  std::size_t numel() const { return data.size(); }
  int batch() const { return shape.empty() ? 0 : shape[0]; }
  // Elements per batch item.
  std::size_t item_size() const { return shape.empty() || shape[0] == 0 ? 0 : numel() / shape[0]; }
  int dim(std::size_t i) const { return shape.at(i); }

  float* item(int n) { return data.data() + static_cast<std::size_t>(n) * item_size(); }
  const float* item(int n) const { return data.data() + static_cast<std::size_t>(n) * item_size(); }

  float& operator[](std::size_t i) { return data[i]; }
  float operator[](std::size_t i) const { return data[i]; }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

struct Parameter {
  Tensor value;
  Tensor grad;

  explicit Parameter(std::vector<int> shape) : value(shape), grad(shape) {}
};

}  // namespace hybridsynth::nn
