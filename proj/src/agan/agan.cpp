#include "agan/agan.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/loss.hpp"
#include "nn/optim.hpp"
#include "nn/serialize.hpp"

namespace hybridsynth::agan {

namespace {
constexpr char kMagic[4] = {'H', 'S', 'A', 'G'};
constexpr std::uint32_t kVersion = 1;
// One image per forward pass: GEMM blocking depends on the batch width, so
// larger chunks would make a record's code depend on its batch neighbours.
constexpr int kInferenceChunk = 1;
}  // namespace

AGanConfig AGanConfig::paper() {
  AGanConfig c;
  c.latent_dim = 128;
  c.image_size = 256;
  c.base_channels = 8;
  c.max_channels = 512;
  c.code_disc_hidden = 1500;
  return c;
}

AGanConfig AGanConfig::desk() { return AGanConfig{}; }

AGanConfig AGanConfig::preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
}

void AGanConfig::validate() const {
  if (latent_dim <= 0) throw std::invalid_argument("latent_dim must be positive");
  if (image_size < 8 || (image_size & (image_size - 1)) != 0)
    throw std::invalid_argument("image_size must be a power of two >= 8, got " +
                                std::to_string(image_size));
  if (base_channels <= 0 || max_channels < base_channels)
    throw std::invalid_argument("need 0 < base_channels <= max_channels");
  if (code_disc_hidden <= 0) throw std::invalid_argument("code_disc_hidden must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(lrelu_slope > 0 && lrelu_slope < 1)) throw std::invalid_argument("lrelu_slope must be in (0, 1)");
}

int AGanConfig::depth() const {
  int d = 0;
  for (int s = image_size; s > 4; s /= 2) ++d;
  return d;
}

std::vector<int> AGanConfig::channels() const {
  std::vector<int> c{base_channels};
  for (int i = 0; i < depth(); ++i) c.push_back(std::min(c.back() * 2, max_channels));
  return c;
}

nlohmann::json to_json(const AGanConfig& c) {
  return nlohmann::json{{"latent_dim", c.latent_dim},
                        {"image_size", c.image_size},
                        {"base_channels", c.base_channels},
                        {"max_channels", c.max_channels},
                        {"code_disc_hidden", c.code_disc_hidden},
                        {"lrelu_slope", c.lrelu_slope},
                        {"recon_weight", c.recon_weight},
                        {"learning_rate", c.learning_rate},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"batch_size", c.batch_size},
                        {"normalization_layers", c.normalization_layers}};
}

AGanConfig agan_config_from_json(const nlohmann::json& j) {
  try {
    AGanConfig c;
    c.latent_dim = j.at("latent_dim");
    c.image_size = j.at("image_size");
    c.base_channels = j.at("base_channels");
    c.max_channels = j.at("max_channels");
    c.code_disc_hidden = j.at("code_disc_hidden");
    c.lrelu_slope = j.at("lrelu_slope");
    c.recon_weight = j.at("recon_weight");
    c.learning_rate = j.at("learning_rate");
    c.beta1 = j.at("beta1");
    c.beta2 = j.at("beta2");
    c.batch_size = j.at("batch_size");
    c.normalization_layers = j.value("normalization_layers", false);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed alpha-GAN config: ") + e.what());
  }
}

// ---------------------------------------------------------------- networks

namespace {

using nn::Sequential;

// 1x1 stem, then per stage a 3x3 conv (doubling width) and 2x2 average
// pooling, ending at 4x4xC; `head` outputs from the flattened map.
std::unique_ptr<Sequential> make_downward(const AGanConfig& c, int head, Rng& rng) {
  const auto ch = c.channels();
  auto net = std::make_unique<Sequential>();
  net->emplace<nn::Conv2d>(1, ch[0], 1, rng).emplace<nn::LeakyReLU>(c.lrelu_slope);
  for (int i = 0; i < c.depth(); ++i) {
    net->emplace<nn::Conv2d>(ch[i], ch[i + 1], 3, rng).emplace<nn::LeakyReLU>(c.lrelu_slope);
    net->emplace<nn::AvgPool2>();
  }
  net->emplace<nn::Reshape>(std::vector<int>{ch.back() * 16});
  net->emplace<nn::Linear>(ch.back() * 16, head, rng);
  return net;
}

std::unique_ptr<Sequential> make_generator(const AGanConfig& c, Rng& rng) {
  const auto ch = c.channels();
  const int top = ch.back();
  auto net = std::make_unique<Sequential>();
  net->emplace<nn::Linear>(c.latent_dim, top * 16, rng).emplace<nn::LeakyReLU>(c.lrelu_slope);
  net->emplace<nn::Reshape>(std::vector<int>{top, 4, 4});
  for (int i = c.depth(); i > 0; --i) {
    net->emplace<nn::Upsample2>();
    net->emplace<nn::Conv2d>(ch[i], ch[i - 1], 3, rng).emplace<nn::LeakyReLU>(c.lrelu_slope);
  }
  net->emplace<nn::Conv2d>(ch[0], 1, 1, rng).emplace<nn::Tanh>();
  return net;
}

std::unique_ptr<Sequential> make_code_discriminator(const AGanConfig& c, Rng& rng) {
  auto net = std::make_unique<Sequential>();
  net->emplace<nn::Linear>(c.latent_dim, c.code_disc_hidden, rng).emplace<nn::LeakyReLU>(c.lrelu_slope);
  net->emplace<nn::Linear>(c.code_disc_hidden, 1, rng);
  return net;
}

nn::Tensor images_to_tensor(const std::vector<Image>& images, std::size_t begin, std::size_t end) {
  const int n = static_cast<int>(end - begin);
  const int s = images[begin].height;
  nn::Tensor t({n, 1, s, s});
  for (int i = 0; i < n; ++i) {
    const auto& px = images[begin + i].pixels;
    std::copy(px.begin(), px.end(), t.item(i));
  }
  return t;
}

}  // namespace

AGanModel::AGanModel(const AGanConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  Rng rng(init_seed);
  encoder_ = make_downward(config_, config_.latent_dim, rng);
  generator_ = make_generator(config_, rng);
  discriminator_ = make_downward(config_, 1, rng);
  code_disc_ = make_code_discriminator(config_, rng);
}

AGanModel build_networks(const AGanConfig& config, std::uint64_t init_seed) {
  return AGanModel(config, init_seed);
}

void AGanModel::check_image(const Image& image) const {
  if (image.height != config_.image_size || image.width != config_.image_size)
    throw DataError("image is " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                    ", model expects " + std::to_string(config_.image_size) + "x" +
                    std::to_string(config_.image_size));
}

LatentCode AGanModel::encode(const Image& image) const { return encode_batch({image}).front(); }

std::vector<LatentCode> AGanModel::encode_batch(const std::vector<Image>& images) const {
  for (const auto& im : images) check_image(im);
  std::vector<LatentCode> out;
  out.reserve(images.size());
  for (std::size_t b = 0; b < images.size(); b += kInferenceChunk) {
    const std::size_t e = std::min(images.size(), b + kInferenceChunk);
    const nn::Tensor z = encoder_->infer(images_to_tensor(images, b, e));
    for (int i = 0; i < z.batch(); ++i) {
      LatentCode c;
      c.values.assign(z.item(i), z.item(i) + config_.latent_dim);
      for (float v : c.values)
        if (!std::isfinite(v)) throw NumericError("encoder produced a non-finite latent value");
      out.push_back(std::move(c));
    }
  }
  return out;
}

Image AGanModel::decode(const LatentCode& code) const { return decode_batch({code}).front(); }

std::vector<Image> AGanModel::decode_batch(const std::vector<LatentCode>& codes) const {
  for (const auto& c : codes)
    if (c.size() != static_cast<std::size_t>(config_.latent_dim))
      throw DataError("latent code has length " + std::to_string(c.size()) + ", model expects " +
                      std::to_string(config_.latent_dim));
  const int s = config_.image_size;
  std::vector<Image> out;
  out.reserve(codes.size());
  for (std::size_t b = 0; b < codes.size(); b += kInferenceChunk) {
    const std::size_t e = std::min(codes.size(), b + kInferenceChunk);
    nn::Tensor z({static_cast<int>(e - b), config_.latent_dim});
    for (std::size_t i = b; i < e; ++i)
      std::copy(codes[i].values.begin(), codes[i].values.end(), z.item(static_cast<int>(i - b)));
    const nn::Tensor x = generator_->infer(z);
    for (int i = 0; i < x.batch(); ++i) {
      Image im(s, s);
      std::copy(x.item(i), x.item(i) + x.item_size(), im.pixels.begin());
      out.push_back(std::move(im));
    }
  }
  return out;
}

void AGanModel::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  nn::write_u32(out, kVersion);
  nn::write_string(out, to_json(config_).dump());
  nn::write_u64(out, static_cast<std::uint64_t>(training_steps_));
  nn::save_state(out, *encoder_);
  nn::save_state(out, *generator_);
  nn::save_state(out, *discriminator_);
  nn::save_state(out, *code_disc_);
  if (!out) throw DataError("write failed for " + path.string());
}

AGanModel AGanModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open alpha-GAN checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
    throw DataError(path.string() + " is not an alpha-GAN checkpoint");
  const std::uint32_t version = nn::read_u32(in);
  if (version != kVersion)
    throw DataError("unsupported alpha-GAN checkpoint version " + std::to_string(version));
  AGanConfig config;
  try {
    config = agan_config_from_json(nlohmann::json::parse(nn::read_string(in)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("alpha-GAN checkpoint config: ") + e.what());
  }
  AGanModel model(config, 0);
  model.training_steps_ = static_cast<long>(nn::read_u64(in));
  nn::load_state(in, *model.encoder_, "encoder");
  nn::load_state(in, *model.generator_, "generator");
  nn::load_state(in, *model.discriminator_, "discriminator");
  nn::load_state(in, *model.code_disc_, "code discriminator");
  return model;
}

// ---------------------------------------------------------------- training

std::vector<LossRecord> pretrain(AGanModel& model, const std::vector<Image>& images, long steps,
                                 std::uint64_t seed,
                                 const std::function<void(const LossRecord&)>& on_step) {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  std::vector<LossRecord> log;
  if (steps == 0) return log;
  if (images.empty()) throw DataError("pretraining corpus is empty");
  const AGanConfig& cfg = model.config();
  for (const auto& im : images)
    if (im.height != cfg.image_size || im.width != cfg.image_size)
      throw DataError("pretraining image is " + std::to_string(im.height) + "x" +
                      std::to_string(im.width) + ", model expects " + std::to_string(cfg.image_size));

  Rng rng(seed);
  nn::AdamOptions opt{cfg.learning_rate, cfg.beta1, cfg.beta2};
  auto& E = model.encoder();
  auto& G = model.generator();
  auto& D = model.discriminator();
  auto& C = model.code_discriminator();
  nn::Adam opt_e(nn::parameters(E), opt), opt_g(nn::parameters(G), opt);
  nn::Adam opt_d(nn::parameters(D), opt), opt_c(nn::parameters(C), opt);

  const int B = cfg.batch_size;
  const int S = cfg.image_size;
  const int L = cfg.latent_dim;
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  auto check = [&](double v, const char* what, long step) {
    if (!std::isfinite(v))
      throw NumericError(std::string("alpha-GAN pretraining: non-finite ") + what + " loss at step " +
                         std::to_string(step));
  };

  log.reserve(static_cast<std::size_t>(steps));
  for (long step = 0; step < steps; ++step) {
    nn::Tensor x({B, 1, S, S});
    for (int i = 0; i < B; ++i) {
      const auto& px = images[uniform_index(rng, images.size())].pixels;
      std::copy(px.begin(), px.end(), x.item(i));
    }
    nn::Tensor z_prior({B, L});
    for (auto& v : z_prior.data) v = gauss(rng);

    // (a) encoder + generator
    opt_e.zero_grad();
    opt_g.zero_grad();
    const nn::Tensor z_enc = E.forward(x);
    const nn::Tensor x_rec = G.forward(z_enc);
    const nn::LossResult recon = nn::l1(x_rec, x);
    nn::Tensor g_rec = recon.grad;
    for (auto& v : g_rec.data) v *= cfg.recon_weight;
    const nn::LossResult adv_rec = nn::bce_with_logits(D.forward(x_rec), 1.0f);
    const nn::Tensor d_from_disc = D.backward(adv_rec.grad);
    for (std::size_t i = 0; i < g_rec.numel(); ++i) g_rec[i] += d_from_disc[i];
    nn::Tensor dz = G.backward(g_rec);
    const nn::LossResult adv_code = nn::bce_with_logits(C.forward(z_enc), 1.0f);
    const nn::Tensor dz_code = C.backward(adv_code.grad);
    for (std::size_t i = 0; i < dz.numel(); ++i) dz[i] += dz_code[i];
    E.backward(dz);

    const nn::Tensor x_gen = G.forward(z_prior);
    const nn::LossResult adv_gen = nn::bce_with_logits(D.forward(x_gen), 1.0f);
    G.backward(D.backward(adv_gen.grad));
    opt_e.step();
    opt_g.step();

    // (b) image discriminator: real vs reconstruction vs prior sample
    opt_d.zero_grad();
    const nn::LossResult d_real = nn::bce_with_logits(D.forward(x), 1.0f);
    D.backward(d_real.grad);
    const nn::LossResult d_rec = nn::bce_with_logits(D.forward(x_rec), 0.0f);
    D.backward(d_rec.grad);
    const nn::LossResult d_gen = nn::bce_with_logits(D.forward(x_gen), 0.0f);
    D.backward(d_gen.grad);
    opt_d.step();

    // (c) code discriminator: N(0, I) vs E(x)
    opt_c.zero_grad();
    const nn::LossResult c_real = nn::bce_with_logits(C.forward(z_prior), 1.0f);
    C.backward(c_real.grad);
    const nn::LossResult c_fake = nn::bce_with_logits(C.forward(z_enc), 0.0f);
    C.backward(c_fake.grad);
    opt_c.step();

    LossRecord rec;
    rec.step = model.training_steps() + step + 1;
    rec.recon = recon.value;
    rec.g = adv_rec.value + adv_gen.value + adv_code.value;
    rec.d = d_real.value + d_rec.value + d_gen.value;
    rec.code_d = c_real.value + c_fake.value;
    check(rec.recon, "reconstruction", rec.step);
    check(rec.g, "generator", rec.step);
    check(rec.d, "discriminator", rec.step);
    check(rec.code_d, "code discriminator", rec.step);
    log.push_back(rec);
    if (on_step) on_step(rec);
  }
  model.record_training_steps(steps);
  return log;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  csv::Document doc;
  doc.header = {"step", "loss_recon", "loss_g", "loss_d", "loss_code_d"};
  for (const auto& r : log)
    doc.rows.push_back({std::to_string(r.step), csv::format_double(r.recon), csv::format_double(r.g),
                        csv::format_double(r.d), csv::format_double(r.code_d)});
  csv::write_file(path, doc);
}

// ---------------------------------------------------------------- probing

ShapeProbe probe_shapes(AGanModel& model) {
  const AGanConfig& cfg = model.config();
  ShapeProbe p;
  p.depth = cfg.depth();
  p.encoder_parameters = nn::parameter_count(model.encoder());

  Image blank(cfg.image_size, cfg.image_size, 0.0f);
  p.encoder_output = model.encode(blank).size();

  nn::Tensor z({1, cfg.latent_dim});
  const nn::Tensor g = model.generator().infer(z);
  p.generator_output.assign(g.shape.begin() + 1, g.shape.end());

  // Walk the discriminator layer by layer to catch the map before the head.
  nn::Tensor h({1, 1, cfg.image_size, cfg.image_size});
  auto& D = model.discriminator();
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (dynamic_cast<nn::Reshape*>(&D.at(i))) p.discriminator_feature_map.assign(h.shape.begin() + 1, h.shape.end());
    h = D.at(i).infer(h);
  }
  p.discriminator_output = h.item_size();
  p.code_discriminator_output = model.code_discriminator().infer(z).item_size();
  return p;
}

}  // namespace hybridsynth::agan
