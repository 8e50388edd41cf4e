#pragma once

#include <utility>
#include <vector>

namespace hybridsynth::eval {

// Probability that a random positive scores above a random negative; ties
// count one half. Labels are 0/1. Throws std::invalid_argument unless both
// classes are present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

double mae(const std::vector<double>& predictions, const std::vector<double>& targets);

double mean(const std::vector<double>& values);
double sample_sd(const std::vector<double>& values);

// Student-t interval: mean +- t_{n-1, (1+level)/2} * s / sqrt(n).
std::pair<double, double> confidence_interval(const std::vector<double>& values,
                                              double level = 0.95);

}  // namespace hybridsynth::eval
