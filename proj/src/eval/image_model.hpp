#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "common/image.hpp"
#include "common/rng.hpp"
#include "eval/gbdt.hpp"
#include "nn/layers.hpp"

namespace hybridsynth::eval {

enum class ImageArch { SmallCnn, ResNet50 };

const char* to_string(ImageArch a);
ImageArch parse_image_arch(const std::string& s);

// Both networks take N x 1 x S x S and return one logit / value per image.
// SmallCnn: four conv3x3-BN-ReLU-maxpool blocks, global average pool, linear.
// ResNet50: bottleneck stages [3, 4, 6, 3] on a single-channel stem.
std::unique_ptr<nn::Sequential> build_image_model(ImageArch arch, Rng& rng);

struct AffineParams {
  double max_rotation_deg = 10.0;
  double max_translate = 0.05;  // fraction of the side
  double scale_min = 0.95, scale_max = 1.05;
  float fill = -1.0f;
};

// Random rotation/translation/scale about the centre, bilinear resampling.
Image random_affine(const Image& image, const AffineParams& params, Rng& rng);

struct ImageTrainParams {
  ImageArch arch = ImageArch::SmallCnn;
  int max_epochs = 1000;
  int patience = 20;
  int batch_size = 20;
  float learning_rate = 1e-4f;
  bool augment = true;
  AffineParams affine;
  double valid_fraction = 0.25;  // held out from the training data for early stopping
};

class ImageModel {
 public:
  // Regression targets are standardized internally; predictions come back in
  // the original units. Binary predictions are probabilities.
  static ImageModel train(const std::vector<Image>& images, const std::vector<double>& targets,
                          Objective objective, const ImageTrainParams& params, std::uint64_t seed);

  std::vector<double> predict(const std::vector<Image>& images) const;
  int epochs_run() const { return epochs_run_; }

 private:
  std::unique_ptr<nn::Sequential> net_;
  Objective objective_ = Objective::Binary;
  double target_mean_ = 0.0, target_sd_ = 1.0;
  int epochs_run_ = 0;
};

}  // namespace hybridsynth::eval
