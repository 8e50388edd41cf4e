#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eval/gbdt.hpp"
#include "schema/table.hpp"

namespace hybridsynth::eval {

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double learning_rate = 0.0;  // <= 0: max(N / exaggeration / 4, 50)
};

// Exact t-SNE to two dimensions with PCA initialization. Deterministic.
std::vector<std::array<double, 2>> tsne(const FeatureMatrix& x, const TsneParams& params = {});

// Mean over points of the fraction of their k nearest neighbours (excluding
// the point itself) that carry a different group label.
double mixing_score(const std::vector<std::array<double, 2>>& points, const std::vector<int>& group,
                    int k = 10);

// Numeric columns standardized over the pooled rows; categorical columns
// one-hot. Both tables must share a schema.
FeatureMatrix tsne_features(const Table& a, const Table& b);

struct TsneOverlap {
  std::vector<std::array<double, 2>> points;
  std::vector<int> group;  // 0 for the first dataset, 1 for the second
  double mixing = 0.0;
};

// Draws sample_n rows (without replacement) from each table, embeds the
// union and scores the overlap.
TsneOverlap tsne_overlap(const Table& first, const Table& second, std::size_t sample_n,
                         std::uint64_t seed, const TsneParams& params = {});

void write_tsne_csv(const std::filesystem::path& path, const TsneOverlap& result,
                    const std::string& first_name, const std::string& second_name);
void write_scatter_png(const std::filesystem::path& path, const TsneOverlap& result,
                       int size = 512);

}  // namespace hybridsynth::eval
