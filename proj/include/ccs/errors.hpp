#pragma once

#include <stdexcept>
#include <string>

namespace ccs {

// Tensor shapes that cannot be combined.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN inputs, near-zero norms and other values an operation cannot handle.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Hyperparameters outside their valid range (k = 0, lr <= 0, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a precondition (non-scalar backward root, N < 2, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed files: manifests, checkpoints, configs.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccs
