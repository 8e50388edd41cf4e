#pragma once

#include <cstdint>
#include <vector>

#include "schema/ingest.hpp"

namespace hybridsynth::toy {

// Synthetic hybrid corpus with two planted image<->table links:
//   * ellipse area      -> numeric "size_score" (area / max area + N(0, 0.05))
//   * mean brightness   -> categorical "shade_class" (dark/light split at the
//                          median, 5% of labels flipped)
// plus two categorical and two numeric noise variables unrelated to the image.
// Missing values are injected into the noise variables only.
struct ToySpec {
  int n = 1000;
  int image_size = 32;
  double missing_rate = 0.03;
  std::uint64_t seed = 7;

  void validate() const;
};

inline constexpr const char* kSizeScore = "size_score";
inline constexpr const char* kShadeClass = "shade_class";

struct ToyRecordTruth {
  double area_fraction = 0;   // ellipse area / image area
  double foreground = 0;      // ellipse intensity
  double mean_brightness = 0; // mean pixel value
};

struct ToyCorpus {
  Corpus corpus;
  std::vector<ToyRecordTruth> truth;  // parallel to corpus.records
};

TableSchema toy_schema(bool with_missing);

ToyCorpus generate_toy_hybrid(const ToySpec& spec);

}  // namespace hybridsynth::toy
