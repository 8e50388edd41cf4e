#include "tabular/cond.hpp"

#include <cmath>
#include <stdexcept>

#include "common/error.hpp"

namespace hybridsynth::tabular {

namespace {

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (u < cdf[i]) return i;
  // u can equal the total only through rounding; take the last non-empty slot.
  for (std::size_t i = cdf.size(); i-- > 0;)
    if (i == 0 || cdf[i] > cdf[i - 1]) return i;
  return 0;
}

}  // namespace

CondSampler::CondSampler(std::vector<std::vector<double>> frequencies)
    : freq_(std::move(frequencies)) {
  if (freq_.empty()) throw DataError("conditional sampling needs at least one discrete block");
  for (const auto& block : freq_) {
    if (block.empty()) throw DataError("empty discrete block");
    std::vector<double> cdf;
    double acc = 0.0;
    for (double f : block) {
      if (!(f >= 0)) throw std::invalid_argument("negative category frequency");
      acc += std::log1p(f);
      cdf.push_back(acc);
    }
    if (acc <= 0) throw DataError("discrete block with no observed values");
    offsets_.push_back(width_);
    width_ += block.size();
    log_cdf_.push_back(std::move(cdf));
  }
}

CondSampler CondSampler::from_rows(const std::vector<ColumnTransform>& transforms,
                                   const std::vector<std::vector<double>>& encoded_rows) {
  std::vector<std::vector<double>> freq;
  for (const auto& t : transforms) freq.emplace_back(t.discrete_width(), 0.0);
  for (const auto& row : encoded_rows) {
    std::size_t at = 0;
    for (std::size_t c = 0; c < transforms.size(); ++c) {
      const std::size_t first = at + (transforms[c].numeric() ? 1 : 0);
      for (std::size_t v = 0; v < freq[c].size(); ++v)
        if (row.at(first + v) > 0.5) freq[c][v] += 1.0;
      at += transforms[c].width();
    }
  }
  return CondSampler(std::move(freq));
}

CondVector CondSampler::make(std::size_t block, std::size_t value) const {
  if (block >= blocks() || value >= block_width(block))
    throw std::invalid_argument("condition out of range");
  CondVector c;
  c.bits.assign(width_, 0.0f);
  c.bits[offsets_[block] + value] = 1.0f;
  c.column = block;
  c.value = value;
  return c;
}

CondVector CondSampler::sample(Rng& rng) const {
  const std::size_t block = uniform_index(rng, blocks());
  return make(block, draw(log_cdf_[block], rng));
}

CondVector CondSampler::sample_original(Rng& rng) const {
  // Every block counts the same rows, so a uniform block followed by a
  // frequency-proportional value equals a draw over all values.
  const std::size_t block = uniform_index(rng, blocks());
  std::vector<double> cdf;
  double acc = 0.0;
  for (double f : freq_[block]) cdf.push_back(acc += f);
  if (acc <= 0) return make(block, draw(log_cdf_[block], rng));
  return make(block, draw(cdf, rng));
}

}  // namespace hybridsynth::tabular
