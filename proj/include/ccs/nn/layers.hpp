#pragma once

#include <cstddef>
#include <string>

#include "ccs/nn/parameters.hpp"
#include "ccs/nn/tensor.hpp"

namespace ccs::nn {

struct Linear {
  Tensor weight;  // [in×out]
  Tensor bias;    // [out]

  Tensor operator()(const Tensor& x) const;
  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
};

// Registers `<prefix>.weight` / `<prefix>.bias`, both uniform in ±1/sqrt(in).
Linear make_linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);

struct LayerNorm {
  Tensor gain;  // [d], starts at 1
  Tensor bias;  // [d], starts at 0

  Tensor operator()(const Tensor& x) const;
};

LayerNorm make_layer_norm(ParameterSet& params, const std::string& prefix, std::size_t features);

// Glorot-uniform bound for an [in×out] projection.
double glorot_bound(std::size_t in, std::size_t out);

}  // namespace ccs::nn
