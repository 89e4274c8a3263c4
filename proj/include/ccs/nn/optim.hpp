#pragma once

#include <cstdint>
#include <vector>

#include "ccs/nn/parameters.hpp"

namespace ccs::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moments per parameter, in ParameterSet order.
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ParameterSet& params);
};

// One bias-corrected Adam update using the grads stored on the parameters.
// Parameters without a grad buffer are treated as having zero gradient.
void adam_step(ParameterSet& params, AdamState& state, double lr, const AdamConfig& config = {});
// Same, but only parameters with active[i] set are touched; the others keep
// their values and moments.
void adam_step(ParameterSet& params, AdamState& state, double lr, const std::vector<bool>& active,
               const AdamConfig& config = {});

double global_grad_norm(const ParameterSet& params);
// Rescales all grads so their global L2 norm is at most max_norm. Returns the
// norm measured before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

}  // namespace ccs::nn
