#include "nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hybridsynth::nn {
namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

void init_uniform(Tensor& t, float bound, Rng& rng) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (auto& v : t.data) v = dist(rng);
}

void require_rank(const Tensor& x, std::size_t rank, const char* layer) {
  if (x.shape.size() != rank)
    throw std::invalid_argument(std::string(layer) + ": expected rank " + std::to_string(rank) +
                                " input, got " + x.shape_string());
}

}  // namespace

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, Rng& rng, bool bias)
    : in_(in_features), out_(out_features), has_bias_(bias),
      weight_({out_features, in_features}), bias_({bias ? out_features : 0}) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_features));
  init_uniform(weight_.value, bound, rng);
  if (has_bias_) init_uniform(bias_.value, bound, rng);
}

Tensor Linear::infer(const Tensor& x) const {
  if (x.item_size() != static_cast<std::size_t>(in_))
    throw std::invalid_argument("Linear: expected " + std::to_string(in_) + " features, got " +
                                x.shape_string());
  const int n = x.batch();
  Tensor y({n, out_});
  CMapRM X(x.data.data(), n, in_);
  CMapRM W(weight_.value.data.data(), out_, in_);
  MapRM Y(y.data.data(), n, out_);
  Y.noalias() = X * W.transpose();
  if (has_bias_) {
    Eigen::Map<const Eigen::RowVectorXf> b(bias_.value.data.data(), out_);
    Y.rowwise() += b;
  }
  return y;
}

Tensor Linear::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int n = input_.batch();
  CMapRM G(grad_out.data.data(), n, out_);
  CMapRM X(input_.data.data(), n, in_);
  MapRM dW(weight_.grad.data.data(), out_, in_);
  dW.noalias() += G.transpose() * X;
  if (has_bias_) {
    Eigen::Map<Eigen::RowVectorXf> db(bias_.grad.data.data(), out_);
    db += G.colwise().sum();
  }
  Tensor dx(input_.shape);
  MapRM DX(dx.data.data(), n, in_);
  CMapRM W(weight_.value.data.data(), out_, in_);
  DX.noalias() = G * W;
  return dx;
}

void Linear::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, Rng& rng, int stride, int padding,
               bool bias)
    : cin_(in_channels), cout_(out_channels), k_(kernel), stride_(stride),
      pad_(padding < 0 ? kernel / 2 : padding), has_bias_(bias),
      weight_({out_channels, in_channels * kernel * kernel}), bias_({bias ? out_channels : 0}) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_channels * kernel * kernel));
  init_uniform(weight_.value, bound, rng);
  if (has_bias_) init_uniform(bias_.value, bound, rng);
}

namespace {

// Unfolds one C x H x W item into a (C*k*k) x (Ho*Wo) matrix.
void im2col(const float* src, int c_in, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* cols) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < c_in; ++c) {
    const float* chan = src + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = cols + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ki;
          float* out_row = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill_n(out_row, wo, 0.0f);
            continue;
          }
          const float* in_row = chan + static_cast<std::size_t>(iy) * w;
          if (stride == 1) {
            // Valid output columns satisfy 0 <= ox - pad + kj < w.
            const int lo = std::clamp(pad - kj, 0, wo);
            const int hi = std::clamp(w + pad - kj, lo, wo);
            std::fill(out_row, out_row + lo, 0.0f);
            std::copy(in_row + lo - pad + kj, in_row + hi - pad + kj, out_row + lo);
            std::fill(out_row + hi, out_row + wo, 0.0f);
            continue;
          }
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kj;
            out_row[ox] = (ix >= 0 && ix < w) ? in_row[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* cols, int c_in, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* dst) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < c_in; ++c) {
    float* chan = dst + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = cols + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          float* in_row = chan + static_cast<std::size_t>(iy) * w;
          const float* g_row = row + static_cast<std::size_t>(oy) * wo;
          if (stride == 1) {
            const int lo = std::clamp(pad - kj, 0, wo);
            const int hi = std::clamp(w + pad - kj, lo, wo);
            const int shift = kj - pad;
            for (int ox = lo; ox < hi; ++ox) in_row[ox + shift] += g_row[ox];
            continue;
          }
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < w) in_row[ix] += g_row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::run(const Tensor& x, FloatBuffer* cols_out) const {
  require_rank(x, 4, "Conv2d");
  if (x.dim(1) != cin_)
    throw std::invalid_argument("Conv2d: expected " + std::to_string(cin_) + " channels, got " +
                                x.shape_string());
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int ho = (h + 2 * pad_ - k_) / stride_ + 1;
  const int wo = (w + 2 * pad_ - k_) / stride_ + 1;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  const int kk = cin_ * k_ * k_;
  const std::size_t item_cols = static_cast<std::size_t>(kk) * plane;
  // A 1x1 stride-1 convolution needs no unfolding: the input item already is
  // the C x (H*W) matrix.
  const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;

  FloatBuffer local;
  FloatBuffer& cols = cols_out ? *cols_out : local;
  if (!direct) cols.resize(cols_out ? item_cols * n : item_cols);

  Tensor y({n, cout_, ho, wo});
  CMapRM W(weight_.value.data.data(), cout_, kk);
  for (int b = 0; b < n; ++b) {
    const float* src;
    if (direct) {
      src = x.item(b);
    } else {
      float* dst = cols.data() + (cols_out ? item_cols * b : 0);
      im2col(x.item(b), cin_, h, w, k_, stride_, pad_, ho, wo, dst);
      src = dst;
    }
    MapRM Y(y.item(b), cout_, plane);
    Y.noalias() = W * CMapRM(src, kk, plane);
    if (has_bias_) {
      Eigen::Map<const Eigen::VectorXf> bias(bias_.value.data.data(), cout_);
      Y.colwise() += bias;
    }
  }
  return y;
}

Tensor Conv2d::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor Conv2d::forward(const Tensor& x) {
  in_shape_ = x.shape;
  if (k_ == 1 && stride_ == 1 && pad_ == 0) {
    cols_ = x.data;
    return run(x, nullptr);
  }
  return run(x, &cols_);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const int n = in_shape_[0], h = in_shape_[2], w = in_shape_[3];
  const int ho = grad_out.dim(2), wo = grad_out.dim(3);
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  const int kk = cin_ * k_ * k_;
  const std::size_t item_cols = static_cast<std::size_t>(kk) * plane;
  const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;

  CMapRM W(weight_.value.data.data(), cout_, kk);
  MapRM dW(weight_.grad.data.data(), cout_, kk);
  Tensor dx(in_shape_);
  MatRM dcols(kk, plane);
  for (int b = 0; b < n; ++b) {
    CMapRM G(grad_out.item(b), cout_, plane);
    CMapRM C(cols_.data() + item_cols * b, kk, plane);
    dW.noalias() += G * C.transpose();
    if (has_bias_) {
      Eigen::Map<Eigen::VectorXf> db(bias_.grad.data.data(), cout_);
      db += G.rowwise().sum();
    }
    if (direct) {
      MapRM DX(dx.item(b), kk, plane);
      DX.noalias() = W.transpose() * G;
    } else {
      dcols.noalias() = W.transpose() * G;
      col2im(dcols.data(), cin_, h, w, k_, stride_, pad_, ho, wo, dx.item(b));
    }
  }
  return dx;
}

void Conv2d::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------- activations

Tensor LeakyReLU::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data)
    if (v < 0.0f) v *= slope_;
  return y;
}

Tensor LeakyReLU::forward(const Tensor& x) {
  output_ = infer(x);
  return output_;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  // slope_ > 0 keeps the sign of the input, so the output sign decides.
  for (std::size_t i = 0; i < dx.numel(); ++i)
    if (output_[i] < 0.0f) dx[i] *= slope_;
  return dx;
}

Tensor ReLU::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data) v = std::max(v, 0.0f);
  return y;
}

Tensor ReLU::forward(const Tensor& x) {
  output_ = infer(x);
  return output_;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.numel(); ++i)
    if (output_[i] <= 0.0f) dx[i] = 0.0f;
  return dx;
}

Tensor Tanh::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data) v = std::tanh(v);
  return y;
}

Tensor Tanh::forward(const Tensor& x) {
  output_ = infer(x);
  return output_;
}

Tensor Tanh::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] *= 1.0f - output_[i] * output_[i];
  return dx;
}

// ---------------------------------------------------------------- resampling

Tensor AvgPool2::infer(const Tensor& x) const {
  require_rank(x, 4, "AvgPool2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw std::invalid_argument("AvgPool2: odd spatial size " + x.shape_string());
  const int ho = h / 2, wo = w / 2;
  Tensor y({n, c, ho, wo});
  for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
    const float* s = x.data.data() + p * h * w;
    float* d = y.data.data() + p * ho * wo;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        const float* a = s + (2 * oy) * w + 2 * ox;
        d[oy * wo + ox] = 0.25f * (a[0] + a[1] + a[w] + a[w + 1]);
      }
  }
  return y;
}

Tensor AvgPool2::forward(const Tensor& x) {
  in_shape_ = x.shape;
  return infer(x);
}

Tensor AvgPool2::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const int ho = h / 2, wo = w / 2;
  for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
    const float* g = grad_out.data.data() + p * ho * wo;
    float* d = dx.data.data() + p * h * w;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        const float v = 0.25f * g[oy * wo + ox];
        float* a = d + (2 * oy) * w + 2 * ox;
        a[0] += v;
        a[1] += v;
        a[w] += v;
        a[w + 1] += v;
      }
  }
  return dx;
}

Tensor Upsample2::infer(const Tensor& x) const {
  require_rank(x, 4, "Upsample2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = h * 2, wo = w * 2;
  Tensor y({n, c, ho, wo});
  for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
    const float* s = x.data.data() + p * h * w;
    float* d = y.data.data() + p * ho * wo;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) d[oy * wo + ox] = s[(oy / 2) * w + ox / 2];
  }
  return y;
}

Tensor Upsample2::forward(const Tensor& x) {
  in_shape_ = x.shape;
  return infer(x);
}

Tensor Upsample2::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const int wo = w * 2, ho = h * 2;
  for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
    const float* g = grad_out.data.data() + p * ho * wo;
    float* d = dx.data.data() + p * h * w;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) d[(oy / 2) * w + ox / 2] += g[oy * wo + ox];
  }
  return dx;
}

Tensor MaxPool::run(const Tensor& x, std::vector<std::size_t>* argmax) const {
  require_rank(x, 4, "MaxPool");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = (h + 2 * p_ - k_) / s_ + 1, wo = (w + 2 * p_ - k_) / s_ + 1;
  Tensor y({n, c, ho, wo});
  if (argmax) argmax->assign(y.numel(), 0);
  std::size_t o = 0;
  for (std::size_t pl = 0; pl < static_cast<std::size_t>(n) * c; ++pl) {
    const std::size_t base = pl * h * w;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox, ++o) {
        float best = -std::numeric_limits<float>::infinity();
        std::size_t best_i = base;
        for (int ki = 0; ki < k_; ++ki) {
          const int iy = oy * s_ - p_ + ki;
          if (iy < 0 || iy >= h) continue;
          for (int kj = 0; kj < k_; ++kj) {
            const int ix = ox * s_ - p_ + kj;
            if (ix < 0 || ix >= w) continue;
            const std::size_t idx = base + static_cast<std::size_t>(iy) * w + ix;
            if (x[idx] > best) {
              best = x[idx];
              best_i = idx;
            }
          }
        }
        y[o] = best;
        if (argmax) (*argmax)[o] = best_i;
      }
  }
  return y;
}

Tensor MaxPool::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor MaxPool::forward(const Tensor& x) {
  in_shape_ = x.shape;
  return run(x, &argmax_);
}

Tensor MaxPool::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  for (std::size_t i = 0; i < grad_out.numel(); ++i) dx[argmax_[i]] += grad_out[i];
  return dx;
}

Tensor GlobalAvgPool::infer(const Tensor& x) const {
  require_rank(x, 4, "GlobalAvgPool");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor y({n, c});
  for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
    const float* s = x.data.data() + p * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += s[i];
    y[p] = static_cast<float>(acc / static_cast<double>(plane));
  }
  return y;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  in_shape_ = x.shape;
  return infer(x);
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  const std::size_t plane = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3];
  for (std::size_t p = 0; p < grad_out.numel(); ++p) {
    const float v = grad_out[p] / static_cast<float>(plane);
    std::fill_n(dx.data.data() + p * plane, plane, v);
  }
  return dx;
}

Tensor Reshape::infer(const Tensor& x) const {
  if (x.item_size() != Tensor::count(item_shape_))
    throw std::invalid_argument("Reshape: cannot view " + x.shape_string());
  Tensor y;
  y.shape = {x.batch()};
  y.shape.insert(y.shape.end(), item_shape_.begin(), item_shape_.end());
  y.data = x.data;
  return y;
}

Tensor Reshape::forward(const Tensor& x) {
  in_shape_ = x.shape;
  return infer(x);
}

Tensor Reshape::backward(const Tensor& grad_out) {
  Tensor dx;
  dx.shape = in_shape_;
  dx.data = grad_out.data;
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels, float eps, float momentum)
    : channels_(channels), eps_(eps), momentum_(momentum), gamma_({channels}), beta_({channels}),
      running_mean_({channels}), running_var_({channels}, 1.0f) {
  gamma_.value.fill(1.0f);
}

namespace {
struct BnLayout {
  std::size_t n, c, inner;
};
BnLayout bn_layout(const Tensor& x, int channels) {
  if (x.shape.size() < 2 || x.dim(1) != channels)
    throw std::invalid_argument("BatchNorm: expected " + std::to_string(channels) +
                                " channels, got " + x.shape_string());
  return {static_cast<std::size_t>(x.dim(0)), static_cast<std::size_t>(channels),
          x.item_size() / channels};
}
}  // namespace

Tensor BatchNorm::infer(const Tensor& x) const {
  const auto L = bn_layout(x, channels_);
  Tensor y = x;
  for (std::size_t b = 0; b < L.n; ++b)
    for (std::size_t ch = 0; ch < L.c; ++ch) {
      const float scale = gamma_.value[ch] / std::sqrt(running_var_[ch] + eps_);
      const float shift = beta_.value[ch] - running_mean_[ch] * scale;
      float* p = y.data.data() + (b * L.c + ch) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) p[i] = p[i] * scale + shift;
    }
  return y;
}

Tensor BatchNorm::forward(const Tensor& x) {
  const auto L = bn_layout(x, channels_);
  const double count = static_cast<double>(L.n * L.inner);
  if (count < 2) throw std::invalid_argument("BatchNorm: training needs more than one value per channel");
  xhat_ = Tensor(x.shape);
  inv_std_.assign(L.c, 0.0f);
  Tensor y(x.shape);
  for (std::size_t ch = 0; ch < L.c; ++ch) {
    double s = 0.0, ss = 0.0;
    for (std::size_t b = 0; b < L.n; ++b) {
      const float* p = x.data.data() + (b * L.c + ch) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) s += p[i];
    }
    const double mean = s / count;
    for (std::size_t b = 0; b < L.n; ++b) {
      const float* p = x.data.data() + (b * L.c + ch) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) ss += (p[i] - mean) * (p[i] - mean);
    }
    const double var = ss / count;
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
    inv_std_[ch] = inv;
    running_mean_[ch] = (1 - momentum_) * running_mean_[ch] + momentum_ * static_cast<float>(mean);
    running_var_[ch] = (1 - momentum_) * running_var_[ch] +
                       momentum_ * static_cast<float>(var * count / (count - 1));
    for (std::size_t b = 0; b < L.n; ++b) {
      const std::size_t off = (b * L.c + ch) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) {
        const float xh = static_cast<float>((x[off + i] - mean) * inv);
        xhat_[off + i] = xh;
        y[off + i] = xh * gamma_.value[ch] + beta_.value[ch];
      }
    }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  const auto L = bn_layout(grad_out, channels_);
  const double count = static_cast<double>(L.n * L.inner);
  Tensor dx(grad_out.shape);
  for (std::size_t ch = 0; ch < L.c; ++ch) {
    double sg = 0.0, sgx = 0.0;
    for (std::size_t b = 0; b < L.n; ++b) {
      const std::size_t off = (b * L.c + ch) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) {
        sg += grad_out[off + i];
        sgx += grad_out[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[ch] += static_cast<float>(sgx);
    beta_.grad[ch] += static_cast<float>(sg);
    const double k = gamma_.value[ch] * inv_std_[ch];
    const double mg = sg / count, mgx = sgx / count;
    for (std::size_t b = 0; b < L.n; ++b) {
      const std::size_t off = (b * L.c + ch) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i)
        dx[off + i] = static_cast<float>(k * (grad_out[off + i] - mg - xhat_[off + i] * mgx));
    }
  }
  return dx;
}

void BatchNorm::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm::collect_buffers(std::vector<Tensor*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---------------------------------------------------------------- containers

Tensor Sequential::infer(const Tensor& x) const {
  Tensor h = x;
  for (const auto& l : layers_) h = l->infer(h);
  return h;
}

Tensor Sequential::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

void Sequential::collect_buffers(std::vector<Tensor*>& out) {
  for (auto& l : layers_) l->collect_buffers(out);
}

Residual::Residual(std::unique_ptr<Sequential> main, std::unique_ptr<Sequential> shortcut)
    : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

Tensor Residual::infer(const Tensor& x) const {
  Tensor y = main_->infer(x);
  const Tensor s = shortcut_ && shortcut_->size() ? shortcut_->infer(x) : x;
  if (s.shape != y.shape) throw std::invalid_argument("Residual: branch shapes differ");
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = std::max(y[i] + s[i], 0.0f);
  return y;
}

Tensor Residual::forward(const Tensor& x) {
  Tensor y = main_->forward(x);
  const Tensor s = shortcut_ && shortcut_->size() ? shortcut_->forward(x) : x;
  if (s.shape != y.shape) throw std::invalid_argument("Residual: branch shapes differ");
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = std::max(y[i] + s[i], 0.0f);
  output_ = y;
  return y;
}

Tensor Residual::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.numel(); ++i)
    if (output_[i] <= 0.0f) g[i] = 0.0f;
  Tensor dx = main_->backward(g);
  const Tensor ds = shortcut_ && shortcut_->size() ? shortcut_->backward(g) : g;
  for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += ds[i];
  return dx;
}

void Residual::collect_parameters(std::vector<Parameter*>& out) {
  main_->collect_parameters(out);
  if (shortcut_) shortcut_->collect_parameters(out);
}

void Residual::collect_buffers(std::vector<Tensor*>& out) {
  main_->collect_buffers(out);
  if (shortcut_) shortcut_->collect_buffers(out);
}

Tensor ConcatResidual::concat(const Tensor& a, const Tensor& b) {
  const int n = a.batch();
  const int wa = static_cast<int>(a.item_size()), wb = static_cast<int>(b.item_size());
  Tensor y({n, wa + wb});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.item(i), wa, y.item(i));
    std::copy_n(b.item(i), wb, y.item(i) + wa);
  }
  return y;
}

Tensor ConcatResidual::infer(const Tensor& x) const { return concat(main_->infer(x), x); }

Tensor ConcatResidual::forward(const Tensor& x) {
  Tensor m = main_->forward(x);
  main_width_ = static_cast<int>(m.item_size());
  in_width_ = static_cast<int>(x.item_size());
  return concat(m, x);
}

Tensor ConcatResidual::backward(const Tensor& grad_out) {
  const int n = grad_out.batch();
  Tensor gm({n, main_width_});
  Tensor gx({n, in_width_});
  for (int i = 0; i < n; ++i) {
    std::copy_n(grad_out.item(i), main_width_, gm.item(i));
    std::copy_n(grad_out.item(i) + main_width_, in_width_, gx.item(i));
  }
  Tensor dx = main_->backward(gm);
  for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += gx[i];
  return dx;
}

void ConcatResidual::collect_parameters(std::vector<Parameter*>& out) {
  main_->collect_parameters(out);
}

void ConcatResidual::collect_buffers(std::vector<Tensor*>& out) { main_->collect_buffers(out); }

// ---------------------------------------------------------------- helpers

std::vector<Parameter*> parameters(Layer& root) {
  std::vector<Parameter*> out;
  root.collect_parameters(out);
  return out;
}

std::size_t parameter_count(Layer& root) {
  std::size_t n = 0;
  for (auto* p : parameters(root)) n += p->value.numel();
  return n;
}

void zero_grad(Layer& root) {
  for (auto* p : parameters(root)) p->grad.fill(0.0f);
}

}  // namespace hybridsynth::nn
