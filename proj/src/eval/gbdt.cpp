#include "eval/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "common/rng.hpp"
#include "eval/metrics.hpp"

namespace hybridsynth::eval {

namespace {

// Per-feature bin upper bounds: value v falls in the first bin whose bound
// is >= v; the last bin is open.
std::vector<std::vector<double>> make_bins(const FeatureMatrix& x, int max_bins) {
  std::vector<std::vector<double>> bounds(x.cols);
  std::vector<double> col(x.rows);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t r = 0; r < x.rows; ++r) col[r] = x.at(r, f);
    std::sort(col.begin(), col.end());
    std::vector<double> distinct;
    for (double v : col)
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    auto& b = bounds[f];
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        b.push_back((distinct[i] + distinct[i + 1]) / 2.0);
    } else {
      for (int q = 1; q < max_bins; ++q) {
        const std::size_t idx = static_cast<std::size_t>(static_cast<double>(q) / max_bins * col.size());
        const std::size_t nxt = std::min(idx + 1, col.size() - 1);
        const double cut = (col[idx] + col[nxt]) / 2.0;
        if (col[nxt] > col[idx] && (b.empty() || cut > b.back())) b.push_back(cut);
      }
    }
  }
  return bounds;
}

struct Split {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;  // rows with bin <= this go left
};

struct Leaf {
  std::vector<std::size_t> rows;
  double g = 0.0, h = 0.0;
  int depth = 0;
  int node = 0;
  Split best;
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Gbdt Gbdt::train(const FeatureMatrix& x, const std::vector<double>& y, const GbdtParams& p,
                 std::uint64_t seed, const FeatureMatrix* x_valid,
                 const std::vector<double>* y_valid) {
  const std::size_t n = x.rows, nf = x.cols;
  if (n == 0 || y.size() != n) throw std::invalid_argument("gbdt: empty data or label mismatch");
  if ((x_valid == nullptr) != (y_valid == nullptr))
    throw std::invalid_argument("gbdt: validation features and labels go together");
  if (p.num_leaves < 2 || p.max_depth < 1 || p.learning_rate <= 0)
    throw std::invalid_argument("gbdt: invalid tree parameters");

  Gbdt model;
  model.objective_ = p.objective;
  if (p.objective == Objective::Binary) {
    double pos = 0.0;
    for (double v : y) {
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("gbdt: binary labels must be 0/1");
      pos += v;
    }
    if (pos == 0.0 || pos == static_cast<double>(n))
      throw std::invalid_argument("gbdt: training labels contain a single class");
    const double rate = pos / static_cast<double>(n);
    model.init_score_ = std::log(rate / (1.0 - rate));
  } else {
    model.init_score_ = mean(y);
  }

  const auto bounds = make_bins(x, p.max_bins);
  std::vector<int> nbins(nf);
  std::vector<std::uint8_t> bins(n * nf);  // feature-major
  for (std::size_t f = 0; f < nf; ++f) {
    nbins[f] = static_cast<int>(bounds[f].size()) + 1;
    for (std::size_t r = 0; r < n; ++r) {
      const auto& b = bounds[f];
      bins[f * n + r] =
          static_cast<std::uint8_t>(std::lower_bound(b.begin(), b.end(), x.at(r, f)) - b.begin());
    }
  }

  Rng rng(seed);
  std::vector<double> score(n, model.init_score_), grad(n), hess(n), weight(n);
  std::vector<double> valid_score;
  if (x_valid) valid_score.assign(x_valid->rows, model.init_score_);
  double best_metric = std::numeric_limits<double>::quiet_NaN();
  int best_iter = 0;

  const int max_bins_all = *std::max_element(nbins.begin(), nbins.end());
  std::vector<double> hg(nf * max_bins_all), hh(nf * max_bins_all);
  std::vector<std::size_t> hc(nf * max_bins_all);

  auto find_split = [&](Leaf& leaf) {
    leaf.best = Split{};
    std::fill(hg.begin(), hg.end(), 0.0);
    std::fill(hh.begin(), hh.end(), 0.0);
    std::fill(hc.begin(), hc.end(), 0);
    for (std::size_t f = 0; f < nf; ++f) {
      const std::uint8_t* fb = bins.data() + f * n;
      double* g = hg.data() + f * max_bins_all;
      double* h = hh.data() + f * max_bins_all;
      std::size_t* c = hc.data() + f * max_bins_all;
      for (std::size_t r : leaf.rows) {
        g[fb[r]] += grad[r] * weight[r];
        h[fb[r]] += hess[r] * weight[r];
        ++c[fb[r]];
      }
    }
    const double parent = leaf.g * leaf.g / (leaf.h + p.lambda_l2);
    const std::size_t total = leaf.rows.size();
    for (std::size_t f = 0; f < nf; ++f) {
      double gl = 0.0, hl = 0.0;
      std::size_t cl = 0;
      const double* g = hg.data() + f * max_bins_all;
      const double* h = hh.data() + f * max_bins_all;
      const std::size_t* c = hc.data() + f * max_bins_all;
      for (int b = 0; b + 1 < nbins[f]; ++b) {
        gl += g[b];
        hl += h[b];
        cl += c[b];
        const std::size_t cr = total - cl;
        const double gr = leaf.g - gl, hr = leaf.h - hl;
        if (cl < static_cast<std::size_t>(p.min_data_in_leaf) ||
            cr < static_cast<std::size_t>(p.min_data_in_leaf))
          continue;
        if (hl < p.min_sum_hessian || hr < p.min_sum_hessian) continue;
        const double gain = gl * gl / (hl + p.lambda_l2) + gr * gr / (hr + p.lambda_l2) - parent;
        if (gain > leaf.best.gain + 1e-12) leaf.best = Split{gain, static_cast<int>(f), b};
      }
    }
  };

  const int warmup = static_cast<int>(1.0 / p.learning_rate);
  for (int iter = 0; iter < p.boost_rounds; ++iter) {
    for (std::size_t r = 0; r < n; ++r) {
      if (p.objective == Objective::Binary) {
        const double q = sigmoid(score[r]);
        grad[r] = q - y[r];
        hess[r] = std::max(q * (1.0 - q), 1e-16);
      } else {
        grad[r] = score[r] - y[r];
        hess[r] = 1.0;
      }
    }

    // Row sample: everything during warm-up, then the largest |g*h| rows
    // plus a random share of the rest with amplified weight.
    std::vector<std::size_t> sample;
    if (!p.goss || iter < warmup) {
      sample.resize(n);
      std::iota(sample.begin(), sample.end(), std::size_t{0});
      std::fill(weight.begin(), weight.end(), 1.0);
    } else {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(grad[a] * hess[a]) > std::abs(grad[b] * hess[b]);
      });
      const auto top_n = static_cast<std::size_t>(p.top_rate * static_cast<double>(n));
      const auto other_n = static_cast<std::size_t>(p.other_rate * static_cast<double>(n));
      const double amplify = (1.0 - p.top_rate) / p.other_rate;
      std::fill(weight.begin(), weight.end(), 0.0);
      for (std::size_t i = 0; i < top_n; ++i) {
        sample.push_back(order[i]);
        weight[order[i]] = 1.0;
      }
      std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top_n), order.end());
      shuffle(rest, rng);
      for (std::size_t i = 0; i < std::min(other_n, rest.size()); ++i) {
        sample.push_back(rest[i]);
        weight[rest[i]] = amplify;
      }
      std::sort(sample.begin(), sample.end());
    }

    Tree tree(1);
    std::vector<Leaf> leaves(1);
    leaves[0].rows = sample;
    for (std::size_t r : sample) {
      leaves[0].g += grad[r] * weight[r];
      leaves[0].h += hess[r] * weight[r];
    }
    find_split(leaves[0]);

    while (static_cast<int>(leaves.size()) < p.num_leaves) {
      int pick = -1;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].best.feature < 0 || leaves[i].depth >= p.max_depth) continue;
        if (pick < 0 || leaves[i].best.gain > leaves[pick].best.gain) pick = static_cast<int>(i);
      }
      if (pick < 0) break;
      Leaf parent = std::move(leaves[pick]);
      const int f = parent.best.feature, b = parent.best.bin;
      Leaf left, right;
      left.depth = right.depth = parent.depth + 1;
      for (std::size_t r : parent.rows) {
        Leaf& side = bins[static_cast<std::size_t>(f) * n + r] <= b ? left : right;
        side.rows.push_back(r);
        side.g += grad[r] * weight[r];
        side.h += hess[r] * weight[r];
      }
      Node& node = tree[parent.node];
      node.feature = f;
      node.threshold = bounds[f][b];
      node.left = static_cast<int>(tree.size());
      node.right = static_cast<int>(tree.size()) + 1;
      left.node = node.left;
      right.node = node.right;
      tree.emplace_back();
      tree.emplace_back();
      find_split(left);
      find_split(right);
      leaves[pick] = std::move(left);
      leaves.push_back(std::move(right));
    }
    for (const Leaf& leaf : leaves)
      tree[leaf.node].value = -leaf.g / (leaf.h + p.lambda_l2) * p.learning_rate;

    model.trees_.push_back(tree);
    for (std::size_t r = 0; r < n; ++r) {
      int at = 0;
      while (tree[at].feature >= 0)
        at = x.at(r, tree[at].feature) <= tree[at].threshold ? tree[at].left : tree[at].right;
      score[r] += tree[at].value;
    }

    if (x_valid) {
      for (std::size_t r = 0; r < x_valid->rows; ++r) {
        int at = 0;
        const double* row = x_valid->row(r);
        while (tree[at].feature >= 0)
          at = row[tree[at].feature] <= tree[at].threshold ? tree[at].left : tree[at].right;
        valid_score[r] += tree[at].value;
      }
      double metric;
      bool better;
      if (p.objective == Objective::Binary) {
        std::vector<int> labels(y_valid->begin(), y_valid->end());
        const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                          std::count(labels.begin(), labels.end(), 0) > 0;
        metric = both ? auroc(valid_score, labels) : 0.0;
        better = std::isnan(best_metric) || metric > best_metric;
      } else {
        metric = mae(valid_score, *y_valid);
        better = std::isnan(best_metric) || metric < best_metric;
      }
      if (better) {
        best_metric = metric;
        best_iter = iter + 1;
      } else if (iter + 1 - best_iter >= p.early_stopping_rounds) {
        break;
      }
    } else {
      best_iter = iter + 1;
    }
  }
  model.trees_.resize(static_cast<std::size_t>(best_iter));
  model.best_iteration_ = best_iter;
  return model;
}

double Gbdt::predict_raw(const double* row) const {
  double s = init_score_;
  for (const Tree& tree : trees_) {
    int at = 0;
    while (tree[at].feature >= 0)
      at = row[tree[at].feature] <= tree[at].threshold ? tree[at].left : tree[at].right;
    s += tree[at].value;
  }
  return s;
}

std::vector<double> Gbdt::predict(const FeatureMatrix& x) const {
  std::vector<double> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double s = predict_raw(x.row(r));
    out[r] = objective_ == Objective::Binary ? sigmoid(s) : s;
  }
  return out;
}

}  // namespace hybridsynth::eval
