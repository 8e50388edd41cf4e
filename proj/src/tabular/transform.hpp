#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/rng.hpp"
#include "schema/table.hpp"

namespace hybridsynth::tabular {

inline constexpr double kStdFloor = 1e-4;
inline constexpr double kPruneWeight = 0.005;
inline constexpr double kAlphaScale = 4.0;

// One 1-D Gaussian mixture fit. log_likelihood holds the total data
// log-likelihood after every EM iteration (the first entry is the value at
// initialization).
struct GmmFit {
  std::vector<double> weights, means, stds;
  std::vector<double> log_likelihood;
  double bic = 0.0;

  std::size_t modes() const { return weights.size(); }
};

// EM with exactly k components. Means start at the k quantile midpoints of
// the data, so the fit is deterministic.
GmmFit fit_gmm_fixed(const std::vector<double>& x, int k, int max_iterations = 300,
                     double tolerance = 1e-9);

// Fits k = 1..max_modes, keeps the lowest-BIC model, then drops modes whose
// weight is below kPruneWeight and renormalizes.
GmmFit fit_gmm(const std::vector<double>& x, int max_modes);

// Per-column encoder. Numeric columns keep only active modes, so the mode
// one-hot has exactly modes() entries.
struct ColumnTransform {
  std::string name;
  VariableKind kind = VariableKind::Numeric;
  std::vector<double> weights, means, stds;
  std::vector<std::string> categories;

  bool numeric() const { return kind == VariableKind::Numeric; }
  std::size_t modes() const { return weights.size(); }
  // Size of the one-hot part (modes or categories).
  std::size_t discrete_width() const { return numeric() ? modes() : categories.size(); }
  // Encoded width: alpha plus mode one-hot, or category one-hot.
  std::size_t width() const { return numeric() ? 1 + modes() : categories.size(); }

  std::vector<double> responsibilities(double v) const;
  std::size_t category_index(const std::string& value) const;  // throws DataError
  void validate() const;
};

nlohmann::json to_json(const ColumnTransform& t);
ColumnTransform column_transform_from_json(const nlohmann::json& j);

ColumnTransform fit_numeric_transform(const std::string& name, const std::vector<double>& values,
                                      int max_modes);
ColumnTransform fit_categorical_transform(const std::string& name,
                                          const std::vector<std::string>& values);

// Numeric columns must be complete; a missing categorical cell is read as
// the missing token.
std::vector<ColumnTransform> fit_column_transforms(const Table& table, int max_modes = 10);

std::size_t encoded_width(const std::vector<ColumnTransform>& transforms);

// With an rng the numeric mode is drawn from the posterior; without one the
// most responsible mode is used.
std::vector<double> transform_row(const std::vector<Value>& row,
                                 const std::vector<ColumnTransform>& transforms,
                                 Rng* rng = nullptr);

std::vector<Value> inverse_transform_row(std::span<const double> encoded,
                                         const std::vector<ColumnTransform>& transforms);

}  // namespace hybridsynth::tabular
