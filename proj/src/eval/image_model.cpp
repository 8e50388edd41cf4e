#include "eval/image_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "common/error.hpp"
#include "nn/loss.hpp"
#include "nn/optim.hpp"

namespace hybridsynth::eval {

using nn::Tensor;

const char* to_string(ImageArch a) {
  return a == ImageArch::SmallCnn ? "small-cnn" : "resnet50";
}

ImageArch parse_image_arch(const std::string& s) {
  if (s == "small-cnn") return ImageArch::SmallCnn;
  if (s == "resnet50") return ImageArch::ResNet50;
  throw std::invalid_argument("unknown image model '" + s + "' (small-cnn or resnet50)");
}

namespace {

std::unique_ptr<nn::Sequential> small_cnn(Rng& rng) {
  auto net = std::make_unique<nn::Sequential>();
  const int widths[] = {8, 16, 32, 32};
  int in = 1;
  for (int w : widths) {
    net->emplace<nn::Conv2d>(in, w, 3, rng, 1, 1, false)
        .emplace<nn::BatchNorm>(w)
        .emplace<nn::ReLU>()
        .emplace<nn::MaxPool>(2, 2, 0);
    in = w;
  }
  net->emplace<nn::GlobalAvgPool>().emplace<nn::Linear>(in, 1, rng);
  return net;
}

nn::LayerPtr bottleneck(int in, int planes, int stride, Rng& rng) {
  constexpr int kExpansion = 4;
  auto main = std::make_unique<nn::Sequential>();
  main->emplace<nn::Conv2d>(in, planes, 1, rng, 1, 0, false)
      .emplace<nn::BatchNorm>(planes)
      .emplace<nn::ReLU>()
      .emplace<nn::Conv2d>(planes, planes, 3, rng, stride, 1, false)
      .emplace<nn::BatchNorm>(planes)
      .emplace<nn::ReLU>()
      .emplace<nn::Conv2d>(planes, planes * kExpansion, 1, rng, 1, 0, false)
      .emplace<nn::BatchNorm>(planes * kExpansion);
  auto shortcut = std::make_unique<nn::Sequential>();
  if (stride != 1 || in != planes * kExpansion) {
    shortcut->emplace<nn::Conv2d>(in, planes * kExpansion, 1, rng, stride, 0, false)
        .emplace<nn::BatchNorm>(planes * kExpansion);
  }
  return std::make_unique<nn::Residual>(std::move(main), std::move(shortcut));
}

std::unique_ptr<nn::Sequential> resnet50(Rng& rng) {
  auto net = std::make_unique<nn::Sequential>();
  net->emplace<nn::Conv2d>(1, 64, 7, rng, 2, 3, false)
      .emplace<nn::BatchNorm>(64)
      .emplace<nn::ReLU>()
      .emplace<nn::MaxPool>(3, 2, 1);
  struct Stage {
    int planes, blocks, stride;
  };
  int in = 64;
  for (const Stage s : {Stage{64, 3, 1}, Stage{128, 4, 2}, Stage{256, 6, 2}, Stage{512, 3, 2}}) {
    for (int b = 0; b < s.blocks; ++b) {
      net->add(bottleneck(in, s.planes, b == 0 ? s.stride : 1, rng));
      in = s.planes * 4;
    }
  }
  net->emplace<nn::GlobalAvgPool>().emplace<nn::Linear>(in, 1, rng);
  return net;
}

Tensor to_batch(const std::vector<Image>& images, const std::vector<std::size_t>& idx,
                std::size_t from, std::size_t to) {
  const int s = images.at(idx[from]).height;
  Tensor t({static_cast<int>(to - from), 1, s, s});
  for (std::size_t i = from; i < to; ++i) {
    const Image& im = images[idx[i]];
    if (im.height != s || im.width != s) throw DataError("image model: images differ in size");
    std::copy(im.pixels.begin(), im.pixels.end(), t.item(static_cast<int>(i - from)));
  }
  return t;
}

struct Snapshot {
  std::vector<nn::FloatBuffer> params, buffers;
};

Snapshot take(nn::Sequential& net) {
  Snapshot s;
  for (nn::Parameter* p : nn::parameters(net)) s.params.push_back(p->value.data);
  std::vector<Tensor*> bufs;
  net.collect_buffers(bufs);
  for (Tensor* b : bufs) s.buffers.push_back(b->data);
  return s;
}

void restore(nn::Sequential& net, const Snapshot& s) {
  auto params = nn::parameters(net);
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value.data = s.params[i];
  std::vector<Tensor*> bufs;
  net.collect_buffers(bufs);
  for (std::size_t i = 0; i < bufs.size(); ++i) bufs[i]->data = s.buffers[i];
}

}  // namespace

std::unique_ptr<nn::Sequential> build_image_model(ImageArch arch, Rng& rng) {
  return arch == ImageArch::SmallCnn ? small_cnn(rng) : resnet50(rng);
}

Image random_affine(const Image& image, const AffineParams& p, Rng& rng) {
  const double angle =
      (uniform01(rng) * 2.0 - 1.0) * p.max_rotation_deg * std::numbers::pi / 180.0;
  const double tx = (uniform01(rng) * 2.0 - 1.0) * p.max_translate * image.width;
  const double ty = (uniform01(rng) * 2.0 - 1.0) * p.max_translate * image.height;
  const double scale = p.scale_min + uniform01(rng) * (p.scale_max - p.scale_min);
  const double cx = (image.width - 1) / 2.0, cy = (image.height - 1) / 2.0;
  const double c = std::cos(angle) / scale, s = std::sin(angle) / scale;

  Image out(image.height, image.width, p.fill);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      // Inverse map: output pixel -> source location.
      const double dx = x - cx - tx, dy = y - cy - ty;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      double acc = 0.0;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const int px = x0 + i, py = y0 + j;
          const double w = (i ? fx : 1.0 - fx) * (j ? fy : 1.0 - fy);
          const bool inside = px >= 0 && px < image.width && py >= 0 && py < image.height;
          acc += w * (inside ? image.at(py, px) : p.fill);
        }
      }
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

ImageModel ImageModel::train(const std::vector<Image>& images, const std::vector<double>& targets,
                             Objective objective, const ImageTrainParams& p, std::uint64_t seed) {
  if (images.size() != targets.size() || images.size() < 4)
    throw DataError("image model: need at least 4 labelled images");
  Rng rng(seed);
  ImageModel model;
  model.objective_ = objective;
  model.net_ = build_image_model(p.arch, rng);

  std::vector<double> y = targets;
  if (objective == Objective::Regression) {
    double m = 0.0, ss = 0.0;
    for (double v : y) m += v;
    m /= static_cast<double>(y.size());
    for (double v : y) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(y.size()));
    model.target_mean_ = m;
    model.target_sd_ = sd > 1e-12 ? sd : 1.0;
    for (double& v : y) v = (v - model.target_mean_) / model.target_sd_;
  } else {
    const auto pos = std::count(targets.begin(), targets.end(), 1.0);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(targets.size()))
      throw DataError("image model: training labels contain a single class");
  }

  std::vector<std::size_t> order = permutation(images.size(), rng);
  const auto n_valid = std::max<std::size_t>(
      1, static_cast<std::size_t>(p.valid_fraction * static_cast<double>(images.size())));
  std::vector<std::size_t> valid(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());

  nn::Adam opt(nn::parameters(*model.net_), nn::AdamOptions{p.learning_rate, 0.9f, 0.999f});
  auto loss_of = [&](const Tensor& out, const std::vector<float>& t) {
    return objective == Objective::Binary ? nn::bce_with_logits(out, t) : nn::l1(out, t);
  };

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  Snapshot best_state = take(*model.net_);
  const auto bs = static_cast<std::size_t>(p.batch_size);
  for (int epoch = 0; epoch < p.max_epochs; ++epoch) {
    shuffle(train, rng);
    for (std::size_t from = 0; from < train.size(); from += bs) {
      const std::size_t to = std::min(train.size(), from + bs);
      if (to - from < 2) continue;  // batch norm needs at least two samples
      std::vector<Image> batch;
      std::vector<float> t;
      for (std::size_t i = from; i < to; ++i) {
        batch.push_back(p.augment ? random_affine(images[train[i]], p.affine, rng)
                                  : images[train[i]]);
        t.push_back(static_cast<float>(y[train[i]]));
      }
      std::vector<std::size_t> idx(batch.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      const Tensor out = model.net_->forward(to_batch(batch, idx, 0, batch.size()));
      const nn::LossResult loss = loss_of(out, t);
      if (!std::isfinite(loss.value))
        throw NumericError("image model: non-finite training loss at epoch " +
                           std::to_string(epoch + 1));
      opt.zero_grad();
      model.net_->backward(loss.grad);
      opt.step();
    }

    double vloss = 0.0;
    for (std::size_t from = 0; from < valid.size(); from += 64) {
      const std::size_t to = std::min(valid.size(), from + 64);
      const Tensor out = model.net_->infer(to_batch(images, valid, from, to));
      std::vector<float> t;
      for (std::size_t i = from; i < to; ++i) t.push_back(static_cast<float>(y[valid[i]]));
      vloss += loss_of(out, t).value * static_cast<double>(to - from);
    }
    vloss /= static_cast<double>(valid.size());
    model.epochs_run_ = epoch + 1;
    if (vloss < best) {
      best = vloss;
      since_best = 0;
      best_state = take(*model.net_);
    } else if (++since_best >= p.patience) {
      break;
    }
  }
  restore(*model.net_, best_state);
  return model;
}

std::vector<double> ImageModel::predict(const std::vector<Image>& images) const {
  std::vector<double> out;
  out.reserve(images.size());
  std::vector<std::size_t> idx(images.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t from = 0; from < images.size(); from += 64) {
    const std::size_t to = std::min(images.size(), from + 64);
    const Tensor raw = net_->infer(to_batch(images, idx, from, to));
    for (float v : raw.data) {
      if (objective_ == Objective::Binary)
        out.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
      else
        out.push_back(static_cast<double>(v) * target_sd_ + target_mean_);
    }
  }
  return out;
}

}  // namespace hybridsynth::eval
