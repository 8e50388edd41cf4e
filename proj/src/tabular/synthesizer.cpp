#include "tabular/synthesizer.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "nn/optim.hpp"
#include "nn/serialize.hpp"

namespace hybridsynth::tabular {

using nn::Tensor;
using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

namespace {

constexpr char kMagic[4] = {'H', 'S', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

// ---------------------------------------------------------------- config

SynthConfig SynthConfig::paper() { return SynthConfig{}; }

SynthConfig SynthConfig::desk() {
  SynthConfig c;
  c.epochs = 300;
  c.batch_size = 100;
  return c;
}

SynthConfig SynthConfig::preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
}

void SynthConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw std::invalid_argument(std::string("synthesizer ") + what + " must be >= 1");
  };
  positive(epochs, "epochs");
  positive(batch_size, "batch_size");
  positive(embedding_dim, "embedding_dim");
  positive(generator_dim, "generator_dim");
  positive(critic_dim, "critic_dim");
  positive(max_modes, "max_modes");
  positive(pac, "pac");
  positive(critic_steps, "critic_steps");
  if (batch_size % pac != 0)
    throw std::invalid_argument("synthesizer batch_size must be a multiple of pac");
  if (!(learning_rate > 0) || !(gumbel_tau > 0) || !(gp_weight >= 0))
    throw std::invalid_argument("synthesizer learning_rate, gumbel_tau must be > 0, gp_weight >= 0");
  if (!(critic_dropout >= 0 && critic_dropout < 1))
    throw std::invalid_argument("synthesizer critic_dropout must be in [0, 1)");
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"embedding_dim", c.embedding_dim},
          {"generator_dim", c.generator_dim},
          {"critic_dim", c.critic_dim},
          {"max_modes", c.max_modes},
          {"pac", c.pac},
          {"critic_steps", c.critic_steps},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"weight_decay", c.weight_decay},
          {"gp_weight", c.gp_weight},
          {"gumbel_tau", c.gumbel_tau},
          {"critic_dropout", c.critic_dropout},
          {"critic_slope", c.critic_slope}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("embedding_dim", c.embedding_dim);
  get("generator_dim", c.generator_dim);
  get("critic_dim", c.critic_dim);
  get("max_modes", c.max_modes);
  get("pac", c.pac);
  get("critic_steps", c.critic_steps);
  get("learning_rate", c.learning_rate);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("weight_decay", c.weight_decay);
  get("gp_weight", c.gp_weight);
  get("gumbel_tau", c.gumbel_tau);
  get("critic_dropout", c.critic_dropout);
  get("critic_slope", c.critic_slope);
  c.validate();
  return c;
}

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  csv::Document doc;
  doc.header = {"epoch", "loss_g", "loss_d", "cond_match"};
  for (const auto& r : log)
    doc.rows.push_back({std::to_string(r.epoch), csv::format_double(r.loss_g),
                        csv::format_double(r.loss_d), csv::format_double(r.cond_match)});
  csv::write_file(path, doc);
}

// ---------------------------------------------------------------- critic

Critic::Critic(int input_dim, const SynthConfig& config, Rng& init_rng)
    : slope_(config.critic_slope), dropout_(config.critic_dropout) {
  auto a = std::make_unique<nn::Linear>(input_dim, config.critic_dim, init_rng);
  auto b = std::make_unique<nn::Linear>(config.critic_dim, config.critic_dim, init_rng);
  auto c = std::make_unique<nn::Linear>(config.critic_dim, 1, init_rng);
  l1_ = a.get();
  l2_ = b.get();
  l3_ = c.get();
  root_.add(std::move(a)).add(std::move(b)).add(std::move(c));
}

nn::FloatBuffer Critic::draw_mask(const Tensor& pre, Rng& rng) const {
  nn::FloatBuffer m(pre.numel());
  const float keep = 1.0f / (1.0f - dropout_);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const float act = pre[i] > 0 ? 1.0f : slope_;
    const bool dropped = dropout_ > 0 && uniform01(rng) < dropout_;
    m[i] = dropped ? 0.0f : act * keep;
  }
  return m;
}

Tensor Critic::forward(const Tensor& x, Rng& rng) {
  Tensor h = l1_->forward(x);
  m1_ = draw_mask(h, rng);
  for (std::size_t i = 0; i < h.numel(); ++i) h[i] *= m1_[i];
  h = l2_->forward(h);
  m2_ = draw_mask(h, rng);
  for (std::size_t i = 0; i < h.numel(); ++i) h[i] *= m2_[i];
  return l3_->forward(h);
}

Tensor Critic::backward(const Tensor& grad_out) {
  Tensor g = l3_->backward(grad_out);
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= m2_[i];
  g = l2_->backward(g);
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= m1_[i];
  return l1_->backward(g);
}

Tensor Critic::infer(const Tensor& x) const {
  Tensor h = l1_->infer(x);
  for (float& v : h.data) v = v > 0 ? v : v * slope_;
  h = l2_->infer(h);
  for (float& v : h.data) v = v > 0 ? v : v * slope_;
  return l3_->infer(h);
}

double Critic::gradient_penalty(const Tensor& x, float weight, Rng& rng) {
  const int n = x.batch();
  const int in = l1_->in_features(), hid = l1_->out_features();
  Tensor pre1 = l1_->infer(x);
  const nn::FloatBuffer m1 = draw_mask(pre1, rng);
  for (std::size_t i = 0; i < pre1.numel(); ++i) pre1[i] *= m1[i];
  const Tensor pre2 = l2_->infer(pre1);
  const nn::FloatBuffer m2 = draw_mask(pre2, rng);

  CMapRM W1(l1_->weight().value.data.data(), hid, in);
  CMapRM W2(l2_->weight().value.data.data(), hid, hid);
  Eigen::Map<const Eigen::RowVectorXf> w3(l3_->weight().value.data.data(), hid);
  CMapRM M1(m1.data(), n, hid), M2(m2.data(), n, hid);

  // Row i of G is dD/dx_i = W1^T diag(m1_i) W2^T diag(m2_i) w3.
  const MatRM B = M2.array().rowwise() * w3.array();
  const MatRM C = B * W2;
  const MatRM A = M1.array() * C.array();
  const MatRM G = A * W1;

  MatRM P(n, in);
  double penalty = 0.0;
  for (int i = 0; i < n; ++i) {
    const double norm = G.row(i).norm();
    const double gap = norm - 1.0;
    penalty += gap * gap;
    const double scale = norm > 1e-12 ? 2.0 * gap / norm : 0.0;
    P.row(i) = G.row(i) * static_cast<float>(weight * scale / n);
  }
  penalty *= static_cast<double>(weight) / n;

  MapRM dW1(l1_->weight().grad.data.data(), hid, in);
  MapRM dW2(l2_->weight().grad.data.data(), hid, hid);
  Eigen::Map<Eigen::RowVectorXf> dw3(l3_->weight().grad.data.data(), hid);
  dW1.noalias() += A.transpose() * P;
  const MatRM dC = M1.array() * (P * W1.transpose()).array();
  dW2.noalias() += B.transpose() * dC;
  const MatRM dB = dC * W2.transpose();
  dw3 += (M2.array() * dB.array()).colwise().sum().matrix();
  return penalty;
}

// ---------------------------------------------------------------- synthesizer

TabularSynthesizer::TabularSynthesizer(SynthConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
}

void TabularSynthesizer::build(std::size_t data_dim, std::size_t cond_dim) {
  Rng init(derive_seed(seed_, 0x5157));
  const int in = config_.embedding_dim + static_cast<int>(cond_dim);
  const int h = config_.generator_dim;
  generator_ = std::make_unique<nn::Sequential>();
  int width = in;
  for (int block = 0; block < 2; ++block) {
    auto main = std::make_unique<nn::Sequential>();
    main->emplace<nn::Linear>(width, h, init).emplace<nn::BatchNorm>(h).emplace<nn::ReLU>();
    generator_->add(std::make_unique<nn::ConcatResidual>(std::move(main)));
    width += h;
  }
  generator_->emplace<nn::Linear>(width, static_cast<int>(data_dim), init);
  const int critic_in = config_.pac * static_cast<int>(data_dim + cond_dim);
  critic_ = std::make_unique<Critic>(critic_in, config_, init);
}

namespace {

// Calls fn(offset, width, is_alpha) for the alpha slot and every one-hot block.
template <typename Fn>
void for_each_span(const std::vector<ColumnTransform>& transforms, Fn fn) {
  std::size_t at = 0;
  for (const auto& t : transforms) {
    if (t.numeric()) {
      fn(at, std::size_t{1}, true);
      fn(at + 1, t.modes(), false);
    } else {
      fn(at, t.categories.size(), false);
    }
    at += t.width();
  }
}

// Offset of each discrete block inside an encoded row.
std::vector<std::size_t> block_offsets(const std::vector<ColumnTransform>& transforms) {
  std::vector<std::size_t> out;
  std::size_t at = 0;
  for (const auto& t : transforms) {
    out.push_back(at + (t.numeric() ? 1 : 0));
    at += t.width();
  }
  return out;
}

float gumbel(Rng& rng) {
  double u = uniform01(rng);
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return static_cast<float>(-std::log(-std::log(u)));
}

Tensor join_rows(const Tensor& a, const std::vector<CondVector>& conds) {
  const int n = a.batch();
  const std::size_t wa = a.item_size(), wc = conds.empty() ? 0 : conds[0].bits.size();
  Tensor out({n, static_cast<int>(wa + wc)});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.item(i), wa, out.item(i));
    std::copy(conds[i].bits.begin(), conds[i].bits.end(), out.item(i) + wa);
  }
  return out;
}

}  // namespace

Tensor TabularSynthesizer::activate(const Tensor& raw, Rng& rng) const {
  Tensor out(raw.shape);
  const float inv_tau = 1.0f / config_.gumbel_tau;
  for (int i = 0; i < raw.batch(); ++i) {
    const float* r = raw.item(i);
    float* o = out.item(i);
    for_each_span(transforms_, [&](std::size_t at, std::size_t w, bool alpha) {
      if (alpha) {
        o[at] = std::tanh(r[at]);
        return;
      }
      float top = -std::numeric_limits<float>::infinity();
      for (std::size_t j = 0; j < w; ++j) {
        o[at + j] = (r[at + j] + gumbel(rng)) * inv_tau;
        top = std::max(top, o[at + j]);
      }
      float sum = 0.0f;
      for (std::size_t j = 0; j < w; ++j) sum += (o[at + j] = std::exp(o[at + j] - top));
      for (std::size_t j = 0; j < w; ++j) o[at + j] /= sum;
    });
  }
  return out;
}

Tensor TabularSynthesizer::activate_backward(const Tensor& activated, const Tensor& grad) const {
  Tensor out(grad.shape);
  const float inv_tau = 1.0f / config_.gumbel_tau;
  for (int i = 0; i < grad.batch(); ++i) {
    const float* y = activated.item(i);
    const float* g = grad.item(i);
    float* d = out.item(i);
    for_each_span(transforms_, [&](std::size_t at, std::size_t w, bool alpha) {
      if (alpha) {
        d[at] = g[at] * (1.0f - y[at] * y[at]);
        return;
      }
      float dot = 0.0f;
      for (std::size_t j = 0; j < w; ++j) dot += y[at + j] * g[at + j];
      for (std::size_t j = 0; j < w; ++j) d[at + j] = inv_tau * y[at + j] * (g[at + j] - dot);
    });
  }
  return out;
}

std::vector<EpochRecord> TabularSynthesizer::fit(
    const Table& table, const std::function<void(const EpochRecord&)>& on_epoch) {
  const std::size_t n_rows = table.row_count();
  if (n_rows < static_cast<std::size_t>(config_.batch_size))
    throw DataError("table has " + std::to_string(n_rows) + " rows, fewer than batch_size " +
                    std::to_string(config_.batch_size));
  schema_ = table.schema;
  transforms_ = fit_column_transforms(table, config_.max_modes);

  Rng rng(seed_);
  std::vector<std::vector<double>> encoded;
  encoded.reserve(n_rows);
  for (const auto& row : table.rows) encoded.push_back(transform_row(row, transforms_, &rng));
  cond_ = std::make_unique<CondSampler>(CondSampler::from_rows(transforms_, encoded));

  const std::size_t D = data_width(), Cw = cond_->width();
  const std::vector<std::size_t> boff = block_offsets(transforms_);
  std::vector<float> data(n_rows * D);
  // rows_by_value[b][v]: rows whose block b is hot at v.
  std::vector<std::vector<std::vector<std::size_t>>> rows_by_value(transforms_.size());
  for (std::size_t b = 0; b < transforms_.size(); ++b)
    rows_by_value[b].resize(transforms_[b].discrete_width());
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t j = 0; j < D; ++j) data[r * D + j] = static_cast<float>(encoded[r][j]);
    for (std::size_t b = 0; b < transforms_.size(); ++b)
      for (std::size_t v = 0; v < rows_by_value[b].size(); ++v)
        if (encoded[r][boff[b] + v] > 0.5) rows_by_value[b][v].push_back(r);
  }
  encoded.clear();

  build(D, Cw);
  nn::AdamOptions opt{config_.learning_rate, config_.beta1, config_.beta2, 1e-8f,
                      config_.weight_decay};
  nn::Adam opt_g(nn::parameters(*generator_), opt);
  nn::Adam opt_d(nn::parameters(critic_->parameters_root()), opt);

  const int B = config_.batch_size, E = config_.embedding_dim, pac = config_.pac;
  const int packed_rows = B / pac;
  const int packed_width = pac * static_cast<int>(D + Cw);
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, n_rows / B);

  auto generator_input = [&](std::vector<CondVector>& conds) {
    conds.clear();
    Tensor z({B, E + static_cast<int>(Cw)});
    for (int i = 0; i < B; ++i) {
      conds.push_back(cond_->sample(rng));
      float* row = z.item(i);
      for (int j = 0; j < E; ++j) row[j] = static_cast<float>(normal(rng));
      std::copy(conds.back().bits.begin(), conds.back().bits.end(), row + E);
    }
    return z;
  };
  auto packed = [&](Tensor t) {
    t.shape = {packed_rows, packed_width};
    return t;
  };
  auto check = [&](double v, const char* what, int epoch) {
    if (!std::isfinite(v))
      throw NumericError(std::string("tabular synthesizer: non-finite ") + what + " at epoch " +
                         std::to_string(epoch));
  };

  std::vector<EpochRecord> log;
  std::vector<CondVector> conds;
  for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
    double sum_g = 0.0, sum_d = 0.0;
    std::size_t matched = 0, generated = 0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      double loss_d = 0.0;
      for (int k = 0; k < config_.critic_steps; ++k) {
        const Tensor fake = activate(generator_->forward(generator_input(conds)), rng);
        const std::vector<std::size_t> perm = permutation(static_cast<std::size_t>(B), rng);
        Tensor real({B, static_cast<int>(D)});
        std::vector<CondVector> real_conds;
        real_conds.reserve(B);
        for (int i = 0; i < B; ++i) {
          const CondVector& c = conds[perm[i]];
          const auto& pool = rows_by_value[c.column][c.value];
          const std::size_t r = pool[uniform_index(rng, pool.size())];
          std::copy_n(data.data() + r * D, D, real.item(i));
          real_conds.push_back(c);
        }
        const Tensor real_cat = packed(join_rows(real, real_conds));
        const Tensor fake_cat = packed(join_rows(fake, conds));

        opt_d.zero_grad();
        const Tensor y_real = critic_->forward(real_cat, rng);
        critic_->backward(Tensor(y_real.shape, -1.0f / packed_rows));
        const Tensor y_fake = critic_->forward(fake_cat, rng);
        critic_->backward(Tensor(y_fake.shape, 1.0f / packed_rows));

        Tensor mixed(real_cat.shape);
        for (int g = 0; g < packed_rows; ++g) {
          const float a = static_cast<float>(uniform01(rng));
          const float* pr = real_cat.item(g);
          const float* pf = fake_cat.item(g);
          float* pm = mixed.item(g);
          for (int j = 0; j < packed_width; ++j) pm[j] = a * pr[j] + (1.0f - a) * pf[j];
        }
        const double pen = critic_->gradient_penalty(mixed, config_.gp_weight, rng);
        double mean_real = 0.0, mean_fake = 0.0;
        for (float v : y_real.data) mean_real += v;
        for (float v : y_fake.data) mean_fake += v;
        loss_d = (mean_fake - mean_real) / packed_rows + pen;
        check(loss_d, "critic loss", epoch);
        opt_d.step();
      }

      const Tensor raw = generator_->forward(generator_input(conds));
      const Tensor fake = activate(raw, rng);
      const Tensor y_fake = critic_->forward(packed(join_rows(fake, conds)), rng);
      Tensor d_cat = critic_->backward(Tensor(y_fake.shape, -1.0f / packed_rows));
      d_cat.shape = {B, static_cast<int>(D + Cw)};
      Tensor d_fake({B, static_cast<int>(D)});
      for (int i = 0; i < B; ++i) std::copy_n(d_cat.item(i), D, d_fake.item(i));
      Tensor d_raw = activate_backward(fake, d_fake);

      // Cross-entropy pulling the conditioned block toward the requested value.
      double ce = 0.0;
      for (int i = 0; i < B; ++i) {
        const CondVector& c = conds[i];
        const std::size_t at = boff[c.column], w = transforms_[c.column].discrete_width();
        const float* r = raw.item(i) + at;
        const float top = *std::max_element(r, r + w);
        double sum = 0.0;
        for (std::size_t j = 0; j < w; ++j) sum += std::exp(static_cast<double>(r[j] - top));
        ce += -(r[c.value] - top - std::log(sum));
        for (std::size_t j = 0; j < w; ++j) {
          const double p = std::exp(static_cast<double>(r[j] - top)) / sum;
          d_raw.item(i)[at + j] += static_cast<float>((p - (j == c.value ? 1.0 : 0.0)) / B);
        }
        const float* a = fake.item(i) + at;
        if (static_cast<std::size_t>(std::max_element(a, a + w) - a) == c.value) ++matched;
        ++generated;
      }
      ce /= B;
      double mean_fake = 0.0;
      for (float v : y_fake.data) mean_fake += v;
      const double loss_g = -mean_fake / packed_rows + ce;
      check(loss_g, "generator loss", epoch);

      opt_g.zero_grad();
      generator_->backward(d_raw);
      opt_g.step();
      sum_g += loss_g;
      sum_d += loss_d;
    }
    EpochRecord rec{epoch, sum_g / steps_per_epoch, sum_d / steps_per_epoch,
                    static_cast<double>(matched) / static_cast<double>(generated)};
    log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  epochs_done_ += config_.epochs;
  fitted_ = true;
  return log;
}

Table TabularSynthesizer::sample(std::size_t n, Rng& rng) const {
  if (!fitted_) throw std::logic_error("tabular synthesizer: sample() before fit()");
  Table out(schema_);
  out.rows.reserve(n);
  const std::size_t D = data_width(), Cw = cond_->width();
  const int E = config_.embedding_dim;
  std::vector<double> row(D);
  for (std::size_t done = 0; done < n;) {
    const int chunk = static_cast<int>(std::min<std::size_t>(config_.batch_size, n - done));
    Tensor z({chunk, E + static_cast<int>(Cw)});
    for (int i = 0; i < chunk; ++i) {
      const CondVector c = cond_->sample_original(rng);
      float* zr = z.item(i);
      for (int j = 0; j < E; ++j) zr[j] = static_cast<float>(normal(rng));
      std::copy(c.bits.begin(), c.bits.end(), zr + E);
    }
    const Tensor raw = generator_->infer(z);
    for (int i = 0; i < chunk; ++i) {
      const float* r = raw.item(i);
      std::fill(row.begin(), row.end(), 0.0);
      // argmax(logit + Gumbel) draws from the block's softmax, matching the
      // hard decision applied to the Gumbel-softmax output during training.
      for_each_span(transforms_, [&](std::size_t at, std::size_t w, bool alpha) {
        if (alpha) {
          row[at] = std::tanh(static_cast<double>(r[at]));
          return;
        }
        std::size_t best = 0;
        float best_v = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j < w; ++j) {
          const float v = r[at + j] + gumbel(rng);
          if (v > best_v) {
            best_v = v;
            best = j;
          }
        }
        row[at + best] = 1.0;
      });
      out.rows.push_back(inverse_transform_row(row, transforms_));
    }
    done += static_cast<std::size_t>(chunk);
  }
  return out;
}

void TabularSynthesizer::save(const std::filesystem::path& path) const {
  if (!fitted_) throw std::logic_error("tabular synthesizer: save() before fit()");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  nlohmann::json meta;
  meta["config"] = to_json(config_);
  meta["seed"] = seed_;
  meta["epochs_done"] = epochs_done_;
  meta["schema"] = to_json(schema_);
  meta["transforms"] = nlohmann::json::array();
  for (const auto& t : transforms_) meta["transforms"].push_back(to_json(t));
  meta["cond_frequencies"] = cond_->frequencies();
  out.write(kMagic, 4);
  nn::write_u32(out, kVersion);
  nn::write_string(out, meta.dump());
  nn::save_state(out, *generator_);
  nn::save_state(out, critic_->parameters_root());
  if (!out) throw DataError("write failed for " + path.string());
}

TabularSynthesizer TabularSynthesizer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
    throw DataError(path.string() + " is not a tabular synthesizer checkpoint");
  const std::uint32_t version = nn::read_u32(in);
  if (version != kVersion)
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(nn::read_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": corrupt metadata: " + e.what());
  }
  TabularSynthesizer s(synth_config_from_json(meta.at("config")), meta.at("seed").get<std::uint64_t>());
  s.epochs_done_ = meta.at("epochs_done").get<int>();
  s.schema_ = schema_from_json(meta.at("schema"));
  for (const auto& t : meta.at("transforms")) s.transforms_.push_back(column_transform_from_json(t));
  s.cond_ = std::make_unique<CondSampler>(
      meta.at("cond_frequencies").get<std::vector<std::vector<double>>>());
  s.build(s.data_width(), s.cond_->width());
  nn::load_state(in, *s.generator_, "generator");
  nn::load_state(in, s.critic_->parameters_root(), "critic");
  s.fitted_ = true;
  return s;
}

}  // namespace hybridsynth::tabular
