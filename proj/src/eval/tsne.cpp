#include "eval/tsne.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/image.hpp"
#include "common/rng.hpp"

namespace hybridsynth::eval {

namespace {

// Conditional affinities with per-point bandwidth found by bisection on the
// entropy. Matrices are column-major and d2 is symmetric, so point i's
// conditional distribution is built in column i.
Eigen::MatrixXd joint_probabilities(const Eigen::MatrixXd& d2, double perplexity) {
  const Eigen::Index n = d2.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto dist = d2.col(i).array();
    auto col = p.col(i).array();
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
      col = (-dist * beta).exp();
      col(i) = 0.0;
      const double sum = std::max(col.sum(), 1e-300);
      const double weighted = (dist * col).sum();
      const double entropy = std::log(sum) + beta * weighted / sum;
      col /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
  }
  Eigen::MatrixXd joint = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  return joint.cwiseMax(1e-12);
}

}  // namespace

std::vector<std::array<double, 2>> tsne(const FeatureMatrix& x, const TsneParams& prm) {
  const auto n = static_cast<Eigen::Index>(x.rows);
  if (n < 4) throw std::invalid_argument("tsne: need at least 4 points");
  if (prm.perplexity >= static_cast<double>(n))
    throw std::invalid_argument("tsne: perplexity must be below the number of points");
  Eigen::MatrixXd data(n, static_cast<Eigen::Index>(x.cols));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < data.cols(); ++j) data(i, j) = x.at(i, j);

  const Eigen::VectorXd sq = data.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                        2.0 * data * data.transpose())
                           .cwiseMax(0.0);
  const Eigen::MatrixXd P = joint_probabilities(d2, prm.perplexity);

  // PCA initialization, scaled so the first coordinate has sd 1e-4.
  Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::MatrixXd y(n, 2);
  if (data.cols() >= 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.transpose() * centered);
    const Eigen::Index c = data.cols();
    Eigen::MatrixXd basis(c, 2);
    basis.col(0) = eig.eigenvectors().col(c - 1);
    basis.col(1) = eig.eigenvectors().col(c - 2);
    for (Eigen::Index k = 0; k < 2; ++k)  // fix the eigenvector sign
      if (basis.col(k).sum() < 0) basis.col(k) *= -1.0;
    y = centered * basis;
  } else {
    y.col(0) = centered.col(0);
    for (Eigen::Index i = 0; i < n; ++i) y(i, 1) = 0.0;
  }
  const double m0 = y.col(0).mean();
  const double sd0 = std::sqrt((y.col(0).array() - m0).square().mean());
  y *= sd0 > 0 ? 1e-4 / sd0 : 1.0;

  const double lr = prm.learning_rate > 0
                        ? prm.learning_rate
                        : std::max(static_cast<double>(n) / prm.early_exaggeration / 4.0, 50.0);
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2), gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n), grad(n, 2);
  for (int it = 0; it < prm.iterations; ++it) {
    const bool early = it < prm.exaggeration_iterations;
    const double exaggeration = early ? prm.early_exaggeration : 1.0;
    const double momentum = early ? 0.5 : 0.8;

    // Student-t kernel; num and P are symmetric, so column i holds point i's row.
    const auto y0 = y.col(0).array(), y1 = y.col(1).array();
    for (Eigen::Index i = 0; i < n; ++i) {
      num.col(i).array() = 1.0 / (1.0 + (y0 - y(i, 0)).square() + (y1 - y(i, 1)).square());
      num(i, i) = 0.0;
    }
    const double zsum = num.sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto kernel = num.col(i).array();
      const Eigen::ArrayXd w =
          (exaggeration * P.col(i).array() - (kernel / zsum).max(1e-12)) * kernel;
      grad(i, 0) = 4.0 * (w * (y(i, 0) - y0)).sum();
      grad(i, 1) = 4.0 * (w * (y(i, 1) - y1)).sum();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < 2; ++k) {
        const bool same_sign = (update(i, k) > 0) == (grad(i, k) > 0);
        gains(i, k) = std::max(same_sign ? gains(i, k) * 0.8 : gains(i, k) + 0.2, 0.01);
        update(i, k) = momentum * update(i, k) - lr * gains(i, k) * grad(i, k);
        y(i, k) += update(i, k);
      }
    }
  }

  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = {y(i, 0), y(i, 1)};
  return out;
}

double mixing_score(const std::vector<std::array<double, 2>>& points, const std::vector<int>& group,
                    int k) {
  const std::size_t n = points.size();
  if (group.size() != n) throw std::invalid_argument("mixing_score: label count mismatch");
  if (k < 1 || static_cast<std::size_t>(k) >= n)
    throw std::invalid_argument("mixing_score: k must be in [1, n)");
  double total = 0.0;
  std::vector<std::pair<double, std::size_t>> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t at = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = points[i][0] - points[j][0], dy = points[i][1] - points[j][1];
      dist[at++] = {dx * dx + dy * dy, j};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    int other = 0;
    for (int m = 0; m < k; ++m) other += group[dist[m].second] != group[i];
    total += static_cast<double>(other) / k;
  }
  return total / static_cast<double>(n);
}

FeatureMatrix tsne_features(const Table& a, const Table& b) {
  if (!(a.schema == b.schema)) throw DataError("tsne: the two tables have different headers");
  const TableSchema& schema = a.schema;
  const std::size_t rows = a.row_count() + b.row_count();
  auto cell = [&](std::size_t r, std::size_t c) -> const Value& {
    return r < a.row_count() ? a.rows[r][c] : b.rows[r - a.row_count()][c];
  };
  std::size_t width = 0;
  for (const auto& v : schema.variables())
    width += v.is_categorical() ? v.categories.size() : 1;
  FeatureMatrix x(rows, width);
  std::size_t col = 0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const VariableSpec& spec = schema.at(c);
    if (spec.is_categorical()) {
      for (std::size_t r = 0; r < rows; ++r) {
        const Value& v = cell(r, c);
        const std::string text = is_missing(v) ? std::string(kMissingToken) : value_to_text(v);
        const auto idx = spec.category_index(text);
        if (!idx) throw DataError("tsne: unknown category '" + text + "' in '" + spec.name + "'");
        x.at(r, col + *idx) = 1.0;
      }
      col += spec.categories.size();
    } else {
      double m = 0.0, ss = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto* d = std::get_if<double>(&cell(r, c));
        if (!d) throw DataError("tsne: missing or non-numeric value in '" + spec.name + "'");
        x.at(r, col) = *d;
        m += *d;
      }
      m /= static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) ss += (x.at(r, col) - m) * (x.at(r, col) - m);
      const double sd = std::sqrt(ss / static_cast<double>(rows));
      for (std::size_t r = 0; r < rows; ++r) x.at(r, col) = sd > 0 ? (x.at(r, col) - m) / sd : 0.0;
      ++col;
    }
  }
  return x;
}

TsneOverlap tsne_overlap(const Table& first, const Table& second, std::size_t sample_n,
                         std::uint64_t seed, const TsneParams& params) {
  if (sample_n > first.row_count() || sample_n > second.row_count())
    throw DataError("tsne: sample_n " + std::to_string(sample_n) + " exceeds the rows available (" +
                    std::to_string(first.row_count()) + ", " +
                    std::to_string(second.row_count()) + ")");
  Rng rng(seed);
  auto draw = [&](const Table& t) {
    Table out(t.schema);
    std::vector<std::size_t> perm = permutation(t.row_count(), rng);
    perm.resize(sample_n);
    for (std::size_t r : perm) out.rows.push_back(t.rows[r]);
    return out;
  };
  const Table a = draw(first), b = draw(second);
  TsneOverlap out;
  out.points = tsne(tsne_features(a, b), params);
  out.group.assign(sample_n, 0);
  out.group.resize(2 * sample_n, 1);
  out.mixing = mixing_score(out.points, out.group);
  return out;
}

void write_tsne_csv(const std::filesystem::path& path, const TsneOverlap& result,
                    const std::string& first_name, const std::string& second_name) {
  csv::Document doc;
  doc.header = {"x", "y", "dataset"};
  for (std::size_t i = 0; i < result.points.size(); ++i)
    doc.rows.push_back({csv::format_double(result.points[i][0]),
                        csv::format_double(result.points[i][1]),
                        result.group[i] == 0 ? first_name : second_name});
  csv::write_file(path, doc);
}

void write_scatter_png(const std::filesystem::path& path, const TsneOverlap& result, int size) {
  if (result.points.empty()) throw std::invalid_argument("scatter: no points");
  double x0 = result.points[0][0], x1 = x0, y0 = result.points[0][1], y1 = y0;
  for (const auto& p : result.points) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  const double margin = 0.05 * size;
  const double span = std::max({x1 - x0, y1 - y0, 1e-12});
  const double scale = (size - 2 * margin) / span;
  std::vector<unsigned char> rgb(static_cast<std::size_t>(size) * size * 3, 255);
  const unsigned char colours[2][3] = {{31, 119, 180}, {255, 127, 14}};
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const int cx = static_cast<int>(margin + (result.points[i][0] - x0) * scale);
    const int cy = size - 1 - static_cast<int>(margin + (result.points[i][1] - y0) * scale);
    const auto* c = colours[result.group[i] == 0 ? 0 : 1];
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const int px = cx + dx, py = cy + dy;
        if (dx * dx + dy * dy > 4 || px < 0 || py < 0 || px >= size || py >= size) continue;
        unsigned char* o = rgb.data() + (static_cast<std::size_t>(py) * size + px) * 3;
        std::copy(c, c + 3, o);
      }
    }
  }
  png::write_rgb(path, size, size, rgb);
}

}  // namespace hybridsynth::eval
