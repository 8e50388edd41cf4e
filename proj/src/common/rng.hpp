#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace hybridsynth {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to fan one master seed out to independent stage seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return mix_seed(mix_seed(master) ^ mix_seed(counter + 0x632be59bd9b4e019ULL));
}

// Stage counters for derive_seed; fixed so manifests stay comparable across versions.
enum class Stage : std::uint64_t {
  Split = 1,
  AganInit = 2,
  AganTrain = 3,
  SynthTrain = 4,
  Sample = 5,
  Unmatched = 6,
  Evaluate = 7,
  Tsne = 8,
};

inline std::uint64_t stage_seed(std::uint64_t master, Stage stage) {
  return derive_seed(master, static_cast<std::uint64_t>(stage));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Fisher-Yates with our own index draw so the permutation does not depend on
// the standard library's shuffle implementation.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  shuffle(p, rng);
  return p;
}

}  // namespace hybridsynth
