#pragma once

#include <cstddef>
#include <string>

#include "ccs/nn/layers.hpp"
#include "ccs/nn/parameters.hpp"
#include "ccs/workspace/workspace.hpp"

namespace ccs::workspace {

// Pairwise multi-head self-attention sublayer, LN(a + MHSA(a)): every
// assembler attends to every other assembler, so one call costs O(N²·d).
// Used as the quadratic reference in the scaling benchmark. The per-row
// feed-forward of a full transformer layer is left out; it is linear in N
// and the same in both blocks.
struct SelfAttentionParams {
  nn::Tensor query;  // [d×d]
  nn::Tensor key;    // [d×d]
  nn::Tensor value;  // [d×d]
  nn::LayerNorm norm_attn;
  std::size_t heads = 1;
};

SelfAttentionParams make_self_attention_params(nn::ParameterSet& params, const std::string& prefix, std::size_t dim,
                                               std::size_t heads, nn::Rng& rng);

AssemblerStates reference_self_attention_block(const AssemblerStates& assemblers, const SelfAttentionParams& params);

}  // namespace ccs::workspace
