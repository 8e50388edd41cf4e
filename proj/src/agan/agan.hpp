#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/image.hpp"
#include "nn/layers.hpp"

namespace hybridsynth::agan {

// Hyper-parameters of the auto-encoding GAN. Channel widths start at
// base_channels after the 1x1 stem and double at every pyramid stage,
// capped at max_channels; the pyramid runs from image_size down to 4x4.
struct AGanConfig {
  int latent_dim = 16;
  int image_size = 32;
  int base_channels = 8;
  int max_channels = 64;
  int code_disc_hidden = 256;
  float lrelu_slope = 0.2f;
  float recon_weight = 10.0f;
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  int batch_size = 16;
  // No batch/instance normalization anywhere; kept in the config so a
  // checkpoint states it explicitly.
  bool normalization_layers = false;

  static AGanConfig paper();  // 256x256 images, 128-d latent
  static AGanConfig desk();   // 32x32 images, 16-d latent
  static AGanConfig preset(const std::string& name);

  void validate() const;
  // Number of down/upsampling stages: log2(image_size) - 2.
  int depth() const;
  // Channel width after the stem (index 0) and after each stage.
  std::vector<int> channels() const;
};

nlohmann::json to_json(const AGanConfig& c);
AGanConfig agan_config_from_json(const nlohmann::json& j);

struct LatentCode {
  std::vector<float> values;
  std::size_t size() const { return values.size(); }
  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

struct LossRecord {
  long step = 0;
  double recon = 0, g = 0, d = 0, code_d = 0;
};

class AGanModel {
 public:
  AGanModel(const AGanConfig& config, std::uint64_t init_seed);
  AGanModel(AGanModel&&) noexcept = default;
  AGanModel& operator=(AGanModel&&) noexcept = default;

  const AGanConfig& config() const { return config_; }
  long training_steps() const { return training_steps_; }
  void record_training_steps(long n) { training_steps_ += n; }

  // Inference: const, no cached state; safe to call concurrently.
  LatentCode encode(const Image& image) const;
  std::vector<LatentCode> encode_batch(const std::vector<Image>& images) const;
  Image decode(const LatentCode& code) const;
  std::vector<Image> decode_batch(const std::vector<LatentCode>& codes) const;

  nn::Sequential& encoder() { return *encoder_; }
  nn::Sequential& generator() { return *generator_; }
  nn::Sequential& discriminator() { return *discriminator_; }
  nn::Sequential& code_discriminator() { return *code_disc_; }

  void save(const std::filesystem::path& path) const;
  static AGanModel load(const std::filesystem::path& path);

 private:
  void check_image(const Image& image) const;

  AGanConfig config_;
  std::unique_ptr<nn::Sequential> encoder_, generator_, discriminator_, code_disc_;
  long training_steps_ = 0;
};

AGanModel build_networks(const AGanConfig& config, std::uint64_t init_seed = 0);

// Alternating updates per step: encoder+generator (weighted L1
// reconstruction plus non-saturating BCE terms against D on both the
// reconstruction and a prior sample, and against the code discriminator on
// E(x)); then D on real vs both fakes; then the code discriminator on
// N(0, I) vs E(x). Throws NumericError on the first non-finite loss.
std::vector<LossRecord> pretrain(AGanModel& model, const std::vector<Image>& images, long steps,
                                 std::uint64_t seed,
                                 const std::function<void(const LossRecord&)>& on_step = {});

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);

// Shapes seen by a single forward pass; used for structural checks.
struct ShapeProbe {
  int depth = 0;
  std::size_t encoder_output = 0;
  std::vector<int> generator_output;            // C x H x W
  std::vector<int> discriminator_feature_map;   // C x H x W before the linear head
  std::size_t discriminator_output = 0;
  std::size_t code_discriminator_output = 0;
  std::size_t encoder_parameters = 0;
};

ShapeProbe probe_shapes(AGanModel& model);

}  // namespace hybridsynth::agan
