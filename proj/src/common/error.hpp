#pragma once

#include <stdexcept>
#include <string>

namespace hybridsynth {

// Input data violates a contract (schema mismatch, missing file, bad header).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training or fitting produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter misuse is reported with std::invalid_argument.

}  // namespace hybridsynth
