#pragma once

#include <memory>
#include <vector>

#include "common/rng.hpp"
#include "nn/tensor.hpp"

namespace hybridsynth::nn {

// A differentiable layer. infer() is const and caches nothing, so a frozen
// network can be evaluated from several threads. forward() is the training
// pass: it records whatever backward() needs, and exactly one backward() may
// follow each forward().
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor infer(const Tensor& x) const = 0;
  virtual Tensor forward(const Tensor& x) = 0;
  // Accumulates parameter gradients and returns the gradient w.r.t. the input.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual void collect_parameters(std::vector<Parameter*>&) {}
  // Non-trainable state that must be checkpointed (batch-norm running stats).
  virtual void collect_buffers(std::vector<Tensor*>&) {}
};

using LayerPtr = std::unique_ptr<Layer>;

class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features, Rng& rng, bool bias = true);

  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }

 private:
  int in_, out_;
  bool has_bias_;
  Parameter weight_;  // out x in
  Parameter bias_;
  Tensor input_;
};

// 2-D convolution with square kernel, implemented as im2col + GEMM.
class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, Rng& rng, int stride = 1,
         int padding = -1, bool bias = true);

  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

 private:
  Tensor run(const Tensor& x, FloatBuffer* cols_out) const;

  int cin_, cout_, k_, stride_, pad_;
  bool has_bias_;
  Parameter weight_;  // cout x (cin*k*k)
  Parameter bias_;
  std::vector<int> in_shape_;
  FloatBuffer cols_;
};

class LeakyReLU final : public Layer {
 public:
  explicit LeakyReLU(float slope) : slope_(slope) {}
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  float slope_;
  Tensor output_;
};

class ReLU final : public Layer {
 public:
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor output_;
};

class Tanh final : public Layer {
 public:
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor output_;
};

// 2x2 average pooling, stride 2.
class AvgPool2 final : public Layer {
 public:
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

// Nearest-neighbour x2 upsampling.
class Upsample2 final : public Layer {
 public:
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

class MaxPool final : public Layer {
 public:
  MaxPool(int kernel, int stride, int padding) : k_(kernel), s_(stride), p_(padding) {}
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor run(const Tensor& x, std::vector<std::size_t>* argmax) const;
  int k_, s_, p_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
};

// N x C x H x W -> N x C.
class GlobalAvgPool final : public Layer {
 public:
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

// Reinterprets each batch item with a new shape (no data movement).
class Reshape final : public Layer {
 public:
  explicit Reshape(std::vector<int> item_shape) : item_shape_(std::move(item_shape)) {}
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> item_shape_;
  std::vector<int> in_shape_;
};

// Batch normalization over axis 1; works for N x F and N x C x H x W.
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(int channels, float eps = 1e-5f, float momentum = 0.1f);
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Tensor*>& out) override;

 private:
  int channels_;
  float eps_, momentum_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  Tensor xhat_;
  std::vector<float> inv_std_;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential& add(LayerPtr layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }
  template <typename L, typename... Args>
  Sequential& emplace(Args&&... args) {
    layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
    return *this;
  }

  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Tensor*>& out) override;

  std::size_t size() const { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<LayerPtr> layers_;
};

// y = relu(main(x) + shortcut(x)); an empty shortcut is the identity.
class Residual final : public Layer {
 public:
  Residual(std::unique_ptr<Sequential> main, std::unique_ptr<Sequential> shortcut);
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Tensor*>& out) override;

 private:
  std::unique_ptr<Sequential> main_, shortcut_;
  Tensor output_;
};

// y = [main(x), x] along the feature axis (N x F inputs).
class ConcatResidual final : public Layer {
 public:
  explicit ConcatResidual(std::unique_ptr<Sequential> main) : main_(std::move(main)) {}
  Tensor infer(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Tensor*>& out) override;

 private:
  static Tensor concat(const Tensor& a, const Tensor& b);
  std::unique_ptr<Sequential> main_;
  int main_width_ = 0;
  int in_width_ = 0;
};

// Parameter and buffer bookkeeping for a network rooted at one layer.
std::vector<Parameter*> parameters(Layer& root);
std::size_t parameter_count(Layer& root);
void zero_grad(Layer& root);

}  // namespace hybridsynth::nn
