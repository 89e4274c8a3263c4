#include "ccs/workspace/self_attention.hpp"

#include <cmath>
#include <vector>

#include "ccs/errors.hpp"
#include "ccs/nn/ops.hpp"

namespace ccs::workspace {

using nn::Tensor;

SelfAttentionParams make_self_attention_params(nn::ParameterSet& params, const std::string& prefix, std::size_t dim,
                                               std::size_t heads, nn::Rng& rng) {
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw ParameterError("self-attention: heads must divide a positive model dimension");
  }
  const double bound = nn::glorot_bound(dim, dim);
  SelfAttentionParams p;
  p.heads = heads;
  p.query = params.add_uniform(prefix + ".query", {dim, dim}, bound, rng);
  p.key = params.add_uniform(prefix + ".key", {dim, dim}, bound, rng);
  p.value = params.add_uniform(prefix + ".value", {dim, dim}, bound, rng);
  p.norm_attn = nn::make_layer_norm(params, prefix + ".norm_attn", dim);
  return p;
}

AssemblerStates reference_self_attention_block(const AssemblerStates& assemblers, const SelfAttentionParams& params) {
  const Tensor& a = assemblers.states;
  const std::size_t width = a.cols() / params.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(width));
  const Tensor q = nn::matmul(a, params.query);
  const Tensor k = nn::matmul(a, params.key);
  const Tensor v = nn::matmul(a, params.value);

  Tensor attended;
  for (std::size_t h = 0; h < params.heads; ++h) {
    const auto cols = [&](const Tensor& x) {
      return params.heads == 1 ? x : nn::slice_cols(x, h * width, (h + 1) * width);
    };
    const Tensor w = nn::softmax(nn::scale(nn::matmul(cols(q), nn::transpose(cols(k))), inv_sqrt), 1);
    const Tensor out = nn::matmul(w, cols(v));
    attended = attended.defined() ? nn::concat_cols(attended, out) : out;
  }
  return {params.norm_attn(nn::add(a, attended))};
}

}  // namespace ccs::workspace
