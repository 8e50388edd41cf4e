#include "toy/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "common/rng.hpp"

namespace hybridsynth::toy {

namespace {

constexpr double kMinAxis = 0.15;  // semi-axis range as a fraction of the side
constexpr double kMaxAxis = 0.45;
constexpr double kPixelNoise = 0.04;
constexpr double kScoreNoise = 0.05;
constexpr double kLabelNoise = 0.05;

// Snap to the 8-bit grid used by the PNG files so that a written and re-read
// corpus is bit-identical to the generated one.
float quantize(double v) {
  const double b = std::clamp(std::round((v + 1.0) * 127.5), 0.0, 255.0);
  return static_cast<float>(b / 127.5 - 1.0);
}

}  // namespace

void ToySpec::validate() const {
  if (n <= 0) throw std::invalid_argument("toy corpus size must be positive");
  if (image_size < 8) throw std::invalid_argument("toy image_size must be >= 8");
  if (!(missing_rate >= 0.0 && missing_rate < 0.5))
    throw std::invalid_argument("missing_rate must be in [0, 0.5)");
}

TableSchema toy_schema(bool with_missing) {
  std::vector<std::string> cat_a{"alpha", "beta", "gamma"};
  std::vector<std::string> cat_b{"yes", "no"};
  if (with_missing) {
    cat_a.push_back(kMissingToken);
    cat_b.push_back(kMissingToken);
  }
  return TableSchema({
      VariableSpec::numeric(kSizeScore),
      VariableSpec::categorical(kShadeClass, {"dark", "light"}),
      VariableSpec::categorical("noise_cat_a", cat_a),
      VariableSpec::categorical("noise_cat_b", cat_b),
      VariableSpec::numeric("noise_num_a"),
      VariableSpec::numeric("noise_num_b"),
  });
}

ToyCorpus generate_toy_hybrid(const ToySpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int S = spec.image_size;
  const double c = (S - 1) / 2.0;

  ToyCorpus out;
  out.corpus.schema = toy_schema(spec.missing_rate > 0.0);
  out.corpus.records.reserve(spec.n);
  out.truth.reserve(spec.n);

  std::vector<double> size_scores;
  for (int i = 0; i < spec.n; ++i) {
    const double a = (kMinAxis + (kMaxAxis - kMinAxis) * uniform01(rng)) * S;
    const double b = (kMinAxis + (kMaxAxis - kMinAxis) * uniform01(rng)) * S;
    const double fg = -0.1 + 1.0 * uniform01(rng);
    const double bg = -0.7 + 0.3 * (uniform01(rng) - 0.5);

    HybridRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "toy-%05d", i);
    rec.id = id;
    rec.image = Image(S, S);
    int inside = 0;
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        const double dy = (y - c) / b, dx = (x - c) / a;
        const bool in = dx * dx + dy * dy <= 1.0;
        inside += in;
        rec.image.at(y, x) = quantize((in ? fg : bg) + normal(rng, 0.0, kPixelNoise));
      }

    ToyRecordTruth truth;
    truth.area_fraction = static_cast<double>(inside) / (S * S);
    truth.foreground = fg;
    truth.mean_brightness = rec.image.mean();

    const double normalized_area = (a * b) / (kMaxAxis * kMaxAxis * S * S);
    size_scores.push_back(normalized_area + normal(rng, 0.0, kScoreNoise));

    const char* cats_a[] = {"alpha", "beta", "gamma"};
    const char* cats_b[] = {"yes", "no"};
    rec.clinical["noise_cat_a"] = std::string(cats_a[uniform_index(rng, 3)]);
    rec.clinical["noise_cat_b"] = std::string(cats_b[uniform_index(rng, 2)]);
    rec.clinical["noise_num_a"] = normal(rng, 50.0, 10.0);
    rec.clinical["noise_num_b"] = normal(rng, 0.0, 1.0);
    for (const char* name : {"noise_cat_a", "noise_cat_b", "noise_num_a", "noise_num_b"})
      if (uniform01(rng) < spec.missing_rate) rec.clinical[name] = std::monostate{};

    out.corpus.records.push_back(std::move(rec));
    out.truth.push_back(truth);
  }

  std::vector<double> means;
  for (const auto& t : out.truth) means.push_back(t.mean_brightness);
  std::vector<double> sorted = means;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (int i = 0; i < spec.n; ++i) {
    bool light = means[i] > median;
    if (uniform01(rng) < kLabelNoise) light = !light;
    auto& rec = out.corpus.records[i];
    rec.clinical[kSizeScore] = size_scores[i];
    rec.clinical[kShadeClass] = std::string(light ? "light" : "dark");
  }
  return out;
}

}  // namespace hybridsynth::toy
