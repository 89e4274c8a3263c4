#include "ccs/nn/layers.hpp"

#include <cmath>

#include "ccs/nn/ops.hpp"

namespace ccs::nn {

Tensor Linear::operator()(const Tensor& x) const { return linear(x, weight, bias); }

Linear make_linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear layer;
  layer.weight = params.add_uniform(prefix + ".weight", {in, out}, bound, rng);
  layer.bias = params.add_uniform(prefix + ".bias", {out}, bound, rng);
  return layer;
}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }

LayerNorm make_layer_norm(ParameterSet& params, const std::string& prefix, std::size_t features) {
  return {params.add_constant(prefix + ".gain", {features}, 1.0), params.add_constant(prefix + ".bias", {features}, 0.0)};
}

double glorot_bound(std::size_t in, std::size_t out) { return std::sqrt(6.0 / static_cast<double>(in + out)); }

}  // namespace ccs::nn
