#pragma once

#include <vector>

#include "common/rng.hpp"
#include "tabular/transform.hpp"

namespace hybridsynth::tabular {

// A one-hot condition over the concatenated discrete blocks: one block per
// categorical column and one per numeric column's mode indicator.
struct CondVector {
  std::vector<float> bits;
  std::size_t column = 0;  // block index
  std::size_t value = 0;   // position inside the block
};

class CondSampler {
 public:
  // frequencies[b][v] is the count of value v in discrete block b.
  explicit CondSampler(std::vector<std::vector<double>> frequencies);

  // Counts every block value over encoded rows (one row per record).
  static CondSampler from_rows(const std::vector<ColumnTransform>& transforms,
                               const std::vector<std::vector<double>>& encoded_rows);

  std::size_t blocks() const { return freq_.size(); }
  std::size_t width() const { return width_; }
  std::size_t offset(std::size_t block) const { return offsets_.at(block); }
  std::size_t block_width(std::size_t block) const { return freq_.at(block).size(); }
  const std::vector<std::vector<double>>& frequencies() const { return freq_; }

  // Training law: block uniformly, value with probability proportional to
  // log(1 + frequency).
  CondVector sample(Rng& rng) const;
  // Generation law: value with probability proportional to its raw frequency
  // across all blocks, which keeps the data's own marginals.
  CondVector sample_original(Rng& rng) const;
  CondVector make(std::size_t block, std::size_t value) const;

 private:
  std::vector<std::vector<double>> freq_;
  std::vector<std::vector<double>> log_cdf_;
  std::vector<std::size_t> offsets_;
  std::size_t width_ = 0;
};

}  // namespace hybridsynth::tabular
