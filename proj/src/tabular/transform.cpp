#include "tabular/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "common/error.hpp"

namespace hybridsynth::tabular {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_normal(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

// E-step: fills resp (n x k, row-major) and returns the log-likelihood.
double expectation(const std::vector<double>& x, const GmmFit& g, std::vector<double>& resp) {
  const std::size_t k = g.modes();
  std::vector<double> log_w(k);
  for (std::size_t j = 0; j < k; ++j)
    log_w[j] = g.weights[j] > 0 ? std::log(g.weights[j]) : -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double* r = resp.data() + i * k;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      r[j] = log_w[j] + log_normal(x[i], g.means[j], g.stds[j]);
      top = std::max(top, r[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      r[j] = std::exp(r[j] - top);
      sum += r[j];
    }
    for (std::size_t j = 0; j < k; ++j) r[j] /= sum;
    total += top + std::log(sum);
  }
  return total;
}

void maximization(const std::vector<double>& x, const std::vector<double>& resp, GmmFit& g) {
  const std::size_t k = g.modes(), n = x.size();
  for (std::size_t j = 0; j < k; ++j) {
    double nk = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nk += resp[i * k + j];
      sx += resp[i * k + j] * x[i];
    }
    g.weights[j] = nk / static_cast<double>(n);
    // An empty component keeps its location; its weight is already zero.
    if (nk <= 1e-300) continue;
    const double mean = sx / nk;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += resp[i * k + j] * (x[i] - mean) * (x[i] - mean);
    g.means[j] = mean;
    g.stds[j] = std::max(std::sqrt(ss / nk), kStdFloor);
  }
}

std::size_t distinct_count(std::vector<double> sorted, std::size_t cap) {
  std::size_t d = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size() && d < cap; ++i)
    if (sorted[i] != sorted[i - 1]) ++d;
  return d;
}

}  // namespace

GmmFit fit_gmm_fixed(const std::vector<double>& x, int k, int max_iterations, double tolerance) {
  if (x.empty()) throw std::invalid_argument("fit_gmm_fixed: empty data");
  if (k < 1) throw std::invalid_argument("fit_gmm_fixed: k must be >= 1");
  for (double v : x)
    if (!std::isfinite(v)) throw DataError("fit_gmm_fixed: non-finite value");

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(var / n), kStdFloor);

  GmmFit g;
  for (int j = 0; j < k; ++j) {
    const auto idx = static_cast<std::size_t>((j + 0.5) / k * n);
    g.means.push_back(sorted[std::min(idx, sorted.size() - 1)]);
    g.stds.push_back(sd);
    g.weights.push_back(1.0 / k);
  }

  std::vector<double> resp(x.size() * static_cast<std::size_t>(k));
  double ll = expectation(x, g, resp);
  g.log_likelihood.push_back(ll);
  for (int it = 0; it < max_iterations; ++it) {
    maximization(x, resp, g);
    const double next = expectation(x, g, resp);
    g.log_likelihood.push_back(next);
    const bool converged = next - ll <= tolerance * std::max(1.0, std::abs(ll));
    ll = next;
    if (converged) break;
  }
  if (!std::isfinite(ll)) throw NumericError("fit_gmm_fixed: non-finite log-likelihood");
  const double params = 3.0 * k - 1.0;
  g.bic = -2.0 * ll + params * std::log(n);
  return g;
}

GmmFit fit_gmm(const std::vector<double>& x, int max_modes) {
  if (max_modes < 1) throw std::invalid_argument("fit_gmm: max_modes must be >= 1");
  if (x.empty()) throw std::invalid_argument("fit_gmm: empty data");
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const int cap = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(max_modes), distinct_count(sorted, max_modes)));

  // A constant column is one mode centred exactly on its value, so every
  // alpha is 0 rather than a rounding residue divided by the std floor.
  if (sorted.front() == sorted.back()) {
    GmmFit g = fit_gmm_fixed(x, 1);
    g.means = {sorted.front()};
    g.stds = {kStdFloor};
    g.weights = {1.0};
    return g;
  }

  GmmFit best;
  bool have = false;
  for (int k = 1; k <= cap; ++k) {
    GmmFit g = fit_gmm_fixed(x, k);
    if (!have || g.bic < best.bic) {
      best = std::move(g);
      have = true;
    }
  }

  GmmFit pruned;
  pruned.log_likelihood = best.log_likelihood;
  pruned.bic = best.bic;
  double kept = 0.0;
  for (std::size_t j = 0; j < best.modes(); ++j) {
    if (best.weights[j] < kPruneWeight) continue;
    pruned.weights.push_back(best.weights[j]);
    pruned.means.push_back(best.means[j]);
    pruned.stds.push_back(best.stds[j]);
    kept += best.weights[j];
  }
  if (pruned.weights.empty()) {
    const auto top = static_cast<std::size_t>(
        std::max_element(best.weights.begin(), best.weights.end()) - best.weights.begin());
    pruned.weights = {1.0};
    pruned.means = {best.means[top]};
    pruned.stds = {best.stds[top]};
    kept = 1.0;
  }
  for (double& w : pruned.weights) w /= kept;
  return pruned;
}

// ---------------------------------------------------------------------------

std::vector<double> ColumnTransform::responsibilities(double v) const {
  std::vector<double> r(modes());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < modes(); ++j) {
    r[j] = std::log(weights[j]) + log_normal(v, means[j], stds[j]);
    top = std::max(top, r[j]);
  }
  double sum = 0.0;
  for (double& x : r) sum += (x = std::exp(x - top));
  for (double& x : r) x /= sum;
  return r;
}

std::size_t ColumnTransform::category_index(const std::string& value) const {
  auto it = std::find(categories.begin(), categories.end(), value);
  if (it == categories.end())
    throw DataError("column '" + name + "': category '" + value + "' was not seen at fit time");
  return static_cast<std::size_t>(it - categories.begin());
}

void ColumnTransform::validate() const {
  if (numeric()) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != stds.size())
      throw DataError("column '" + name + "': malformed mixture");
    double sum = 0.0;
    for (std::size_t j = 0; j < modes(); ++j) {
      if (!(weights[j] >= 0) || !(stds[j] > 0) || !std::isfinite(means[j]))
        throw DataError("column '" + name + "': invalid mixture component");
      sum += weights[j];
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DataError("column '" + name + "': weights do not sum to 1");
  } else {
    if (categories.empty()) throw DataError("column '" + name + "': no categories");
    std::set<std::string> seen(categories.begin(), categories.end());
    if (seen.size() != categories.size())
      throw DataError("column '" + name + "': duplicate categories");
  }
}

nlohmann::json to_json(const ColumnTransform& t) {
  nlohmann::json j{{"name", t.name}, {"kind", to_string(t.kind)}};
  if (t.numeric()) {
    j["weights"] = t.weights;
    j["means"] = t.means;
    j["stds"] = t.stds;
  } else {
    j["categories"] = t.categories;
  }
  return j;
}

ColumnTransform column_transform_from_json(const nlohmann::json& j) {
  ColumnTransform t;
  t.name = j.at("name").get<std::string>();
  t.kind = parse_variable_kind(j.at("kind").get<std::string>());
  if (t.numeric()) {
    t.weights = j.at("weights").get<std::vector<double>>();
    t.means = j.at("means").get<std::vector<double>>();
    t.stds = j.at("stds").get<std::vector<double>>();
  } else {
    t.categories = j.at("categories").get<std::vector<std::string>>();
  }
  t.validate();
  return t;
}

ColumnTransform fit_numeric_transform(const std::string& name, const std::vector<double>& values,
                                      int max_modes) {
  GmmFit g = fit_gmm(values, max_modes);
  ColumnTransform t;
  t.name = name;
  t.kind = VariableKind::Numeric;
  t.weights = std::move(g.weights);
  t.means = std::move(g.means);
  t.stds = std::move(g.stds);
  return t;
}

ColumnTransform fit_categorical_transform(const std::string& name,
                                          const std::vector<std::string>& values) {
  ColumnTransform t;
  t.name = name;
  t.kind = VariableKind::Categorical;
  std::set<std::string> seen;
  for (const auto& v : values)
    if (seen.insert(v).second) t.categories.push_back(v);
  if (t.categories.empty()) throw DataError("column '" + name + "': no values");
  return t;
}

namespace {

std::string category_text(const Value& v, const std::string& column) {
  if (is_missing(v)) return kMissingToken;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw DataError("column '" + column + "': expected a category, got a number");
}

double numeric_value(const Value& v, const std::string& column) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (!std::isfinite(*d)) throw DataError("column '" + column + "': non-finite value");
    return *d;
  }
  if (is_missing(v)) throw DataError("column '" + column + "': missing numeric value (impute first)");
  throw DataError("column '" + column + "': non-numeric value '" + std::get<std::string>(v) + "'");
}

}  // namespace

std::vector<ColumnTransform> fit_column_transforms(const Table& table, int max_modes) {
  if (table.row_count() == 0) throw DataError("fit_column_transforms: empty table");
  std::vector<ColumnTransform> out;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    const VariableSpec& spec = table.schema.at(c);
    if (spec.is_categorical()) {
      std::vector<std::string> values;
      values.reserve(table.row_count());
      for (const auto& row : table.rows) values.push_back(category_text(row.at(c), spec.name));
      out.push_back(fit_categorical_transform(spec.name, values));
    } else {
      std::vector<double> values;
      values.reserve(table.row_count());
      for (const auto& row : table.rows) values.push_back(numeric_value(row.at(c), spec.name));
      out.push_back(fit_numeric_transform(spec.name, values, max_modes));
    }
  }
  return out;
}

std::size_t encoded_width(const std::vector<ColumnTransform>& transforms) {
  std::size_t w = 0;
  for (const auto& t : transforms) w += t.width();
  return w;
}

std::vector<double> transform_row(const std::vector<Value>& row,
                                 const std::vector<ColumnTransform>& transforms, Rng* rng) {
  if (row.size() != transforms.size())
    throw DataError("transform_row: row has " + std::to_string(row.size()) + " cells, expected " +
                    std::to_string(transforms.size()));
  std::vector<double> out(encoded_width(transforms), 0.0);
  std::size_t at = 0;
  for (std::size_t c = 0; c < transforms.size(); ++c) {
    const ColumnTransform& t = transforms[c];
    if (t.numeric()) {
      const double v = numeric_value(row[c], t.name);
      const std::vector<double> r = t.responsibilities(v);
      std::size_t k = 0;
      if (rng) {
        double u = uniform01(*rng), acc = 0.0;
        k = r.size() - 1;
        for (std::size_t j = 0; j < r.size(); ++j) {
          acc += r[j];
          if (u < acc) {
            k = j;
            break;
          }
        }
      } else {
        k = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
      }
      const double alpha = (v - t.means[k]) / (kAlphaScale * t.stds[k]);
      out[at] = std::clamp(alpha, -1.0, 1.0);
      out[at + 1 + k] = 1.0;
    } else {
      out[at + t.category_index(category_text(row[c], t.name))] = 1.0;
    }
    at += t.width();
  }
  return out;
}

std::vector<Value> inverse_transform_row(std::span<const double> encoded,
                                         const std::vector<ColumnTransform>& transforms) {
  if (encoded.size() != encoded_width(transforms))
    throw DataError("inverse_transform_row: width " + std::to_string(encoded.size()) +
                    ", expected " + std::to_string(encoded_width(transforms)));
  std::vector<Value> row;
  row.reserve(transforms.size());
  std::size_t at = 0;
  for (const ColumnTransform& t : transforms) {
    const double* block = encoded.data() + at + (t.numeric() ? 1 : 0);
    const std::size_t k = static_cast<std::size_t>(
        std::max_element(block, block + t.discrete_width()) - block);
    if (t.numeric()) {
      const double alpha = std::clamp(encoded[at], -1.0, 1.0);
      row.emplace_back(alpha * kAlphaScale * t.stds[k] + t.means[k]);
    } else {
      row.emplace_back(t.categories[k]);
    }
    at += t.width();
  }
  return row;
}

}  // namespace hybridsynth::tabular
