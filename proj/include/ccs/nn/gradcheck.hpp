#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ccs/nn/parameters.hpp"
#include "ccs/nn/tensor.hpp"

namespace ccs::nn {

struct GradCheckOptions {
  double step = 1e-5;       // central difference half-width h
  double tolerance = 1e-4;  // max accepted relative error
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
  // below the floor the comparison is effectively absolute.
  double floor = 1e-6;
};

struct ParameterCheck {
  std::string name;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParameterCheck> parameters;
  double tolerance = 0.0;

  bool passed() const;
  double max_relative_error() const;
  std::vector<std::string> failures() const;
  std::string to_string() const;
};

double relative_error(double analytic, double numeric, double floor);

// Compares the reverse-mode gradient of the scalar returned by `fn` against
// central finite differences for every entry of every listed parameter.
// `fn` must be deterministic; it is evaluated 2·entries + 1 times.
GradCheckReport grad_check(const std::function<Tensor()>& fn, std::vector<Parameter> params,
                           const GradCheckOptions& options = {});
GradCheckReport grad_check(const std::function<Tensor()>& fn, const ParameterSet& params,
                           const GradCheckOptions& options = {});

}  // namespace ccs::nn
