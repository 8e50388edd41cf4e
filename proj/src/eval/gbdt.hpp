#pragma once

#include <cstdint>
#include <vector>

namespace hybridsynth::eval {

// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

enum class Objective { Binary, Regression };

// Histogram gradient boosting with leaf-wise growth and gradient-based
// one-side sampling (GOSS). Defaults follow the usual LightGBM values.
struct GbdtParams {
  Objective objective = Objective::Binary;
  int boost_rounds = 1000;
  int early_stopping_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 5;
  int num_leaves = 31;
  int min_data_in_leaf = 20;
  double min_sum_hessian = 1e-3;
  double lambda_l2 = 0.0;
  int max_bins = 255;
  bool goss = true;
  double top_rate = 0.2;
  double other_rate = 0.1;
};

class Gbdt {
 public:
  // Validation data drives early stopping (AUROC for Binary, MAE for
  // Regression); without it all rounds are kept.
  static Gbdt train(const FeatureMatrix& x, const std::vector<double>& y, const GbdtParams& params,
                    std::uint64_t seed, const FeatureMatrix* x_valid = nullptr,
                    const std::vector<double>* y_valid = nullptr);

  double predict_raw(const double* row) const;
  // Probabilities for Binary, values for Regression.
  std::vector<double> predict(const FeatureMatrix& x) const;

  std::size_t trees() const { return trees_.size(); }
  int best_iteration() const { return best_iteration_; }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  Objective objective_ = Objective::Binary;
  double init_score_ = 0.0;
  std::vector<Tree> trees_;
  int best_iteration_ = 0;
};

}  // namespace hybridsynth::eval
