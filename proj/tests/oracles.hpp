#pragma once

// Reference computations written independently of the library, shared by
// the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace hybridsynth::oracle {

// Equal-weight N(0,1) / N(10,1) mixture.
inline std::vector<double> planted_mixture(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> a(0.0, 1.0), b(10.0, 1.0);
  std::bernoulli_distribution pick(0.5);
  std::vector<double> x(n);
  for (auto& v : x) v = pick(rng) ? b(rng) : a(rng);
  return x;
}

// Straightforward two-component EM: starts from the data extremes rather
// than quantiles and runs a fixed 500 iterations.
struct Em2Fit {
  double w[2], mu[2], sd[2];
};

inline Em2Fit em2(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0;
  for (double v : x) var += (v - m) * (v - m);
  Em2Fit f{{0.5, 0.5}, {*lo, *hi}, {std::sqrt(var / n), std::sqrt(var / n)}};
  const double pi = std::acos(-1.0);
  std::vector<double> r(x.size());
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double p[2];
      for (int k = 0; k < 2; ++k)
        p[k] = f.w[k] / (f.sd[k] * std::sqrt(2 * pi)) *
               std::exp(-0.5 * std::pow((x[i] - f.mu[k]) / f.sd[k], 2));
      r[i] = p[1] / (p[0] + p[1]);
    }
    double n1 = 0, s1 = 0, s0 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      n1 += r[i];
      s1 += r[i] * x[i];
      s0 += (1 - r[i]) * x[i];
    }
    const double n0 = n - n1;
    f.mu[0] = s0 / n0;
    f.mu[1] = s1 / n1;
    double v0 = 0, v1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v0 += (1 - r[i]) * std::pow(x[i] - f.mu[0], 2);
      v1 += r[i] * std::pow(x[i] - f.mu[1], 2);
    }
    f.sd[0] = std::sqrt(v0 / n0);
    f.sd[1] = std::sqrt(v1 / n1);
    f.w[0] = n0 / n;
    f.w[1] = n1 / n;
  }
  return f;
}

inline double em2_posterior(const Em2Fit& f, int k, double v) {
  double p[2];
  for (int j = 0; j < 2; ++j)
    p[j] = f.w[j] / f.sd[j] * std::exp(-0.5 * std::pow((v - f.mu[j]) / f.sd[j], 2));
  return p[k] / (p[0] + p[1]);
}

// Counts positive/negative pairs directly; ties score one half.
inline double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      else if (s[i] == s[j]) wins += 0.5;
    }
  return wins / pairs;
}

}  // namespace hybridsynth::oracle
