#include "ccs/workspace/workspace.hpp"

#include <cmath>
#include <string>

#include "ccs/errors.hpp"
#include "ccs/nn/ops.hpp"

namespace ccs::workspace {

using nn::Tensor;

void WorkspaceDims::validate() const {
  if (slots == 0 || slot_dim == 0 || assembler_dim == 0 || key_dim == 0 || heads == 0) {
    throw ParameterError("workspace dimensions must be positive");
  }
  if (key_dim % heads != 0 || slot_dim % heads != 0 || assembler_dim % heads != 0) {
    throw ParameterError("heads (" + std::to_string(heads) + ") must divide d_e (" + std::to_string(key_dim) +
                         "), d_l (" + std::to_string(slot_dim) + ") and d_a (" + std::to_string(assembler_dim) + ")");
  }
}

WorkspaceParams make_workspace_params(nn::ParameterSet& params, const std::string& prefix, const WorkspaceDims& dims,
                                      nn::Rng& rng) {
  dims.validate();
  const auto proj = [&](const std::string& name, std::size_t in, std::size_t out) {
    return params.add_uniform(prefix + "." + name, {in, out}, nn::glorot_bound(in, out), rng);
  };
  WorkspaceParams p;
  p.dims = dims;
  p.write_query = proj("write.query", dims.slot_dim, dims.key_dim);
  p.write_key = proj("write.key", dims.assembler_dim, dims.key_dim);
  p.write_value = proj("write.value", dims.assembler_dim, dims.slot_dim);
  p.read_query = proj("read.query", dims.assembler_dim, dims.key_dim);
  p.read_key = proj("read.key", dims.slot_dim, dims.key_dim);
  p.read_value = proj("read.value", dims.slot_dim, dims.assembler_dim);
  p.norm_read = nn::make_layer_norm(params, prefix + ".norm_read", dims.assembler_dim);
  p.ff_in = nn::make_linear(params, prefix + ".ff.in", dims.assembler_dim, 4 * dims.assembler_dim, rng);
  p.ff_out = nn::make_linear(params, prefix + ".ff.out", 4 * dims.assembler_dim, dims.assembler_dim, rng);
  p.norm_ff = nn::make_layer_norm(params, prefix + ".norm_ff", dims.assembler_dim);
  return p;
}

WorkspaceState make_initial_state(nn::ParameterSet& params, const std::string& prefix, const WorkspaceDims& dims,
                                  nn::Rng& rng) {
  dims.validate();
  return {params.add_uniform(prefix + ".initial_slots", {dims.slots, dims.slot_dim}, 1.0, rng)};
}

namespace {

void expect_matrix(const Tensor& t, std::size_t cols, const char* what) {
  if (t.rank() != 2 || t.cols() != cols) {
    throw ShapeError(std::string(what) + " must have " + std::to_string(cols) + " columns, got " +
                     nn::shape_to_string(t.shape()));
  }
}

Tensor head_cols(const Tensor& x, std::size_t head, std::size_t heads) {
  if (heads == 1) return x;
  const std::size_t w = x.cols() / heads;
  return nn::slice_cols(x, head * w, (head + 1) * w);
}

Tensor concat_heads(const std::vector<Tensor>& parts) {
  Tensor out = parts.front();
  for (std::size_t h = 1; h < parts.size(); ++h) out = nn::concat_cols(out, parts[h]);
  return out;
}

}  // namespace

WorkspaceState write_step(const WorkspaceState& state, const AssemblerStates& messages, const WorkspaceParams& params,
                          std::size_t k, std::vector<Tensor>* weights) {
  if (k < 1) throw ParameterError("write_step: k must be >= 1");
  const auto& d = params.dims;
  expect_matrix(state.slots, d.slot_dim, "workspace state");
  expect_matrix(messages.states, d.assembler_dim, "messages");
  if (messages.count() < 1) throw ContractError("write_step: no messages");

  const std::size_t k_eff = std::min(k, messages.count());
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d.key_dim / d.heads));
  const Tensor queries = nn::matmul(state.slots, params.write_query);
  const Tensor keys = nn::matmul(messages.states, params.write_key);
  const Tensor values = nn::matmul(messages.states, params.write_value);

  std::vector<Tensor> heads;
  for (std::size_t h = 0; h < d.heads; ++h) {
    const Tensor logits =
        nn::scale(nn::matmul(head_cols(queries, h, d.heads), nn::transpose(head_cols(keys, h, d.heads))), inv_sqrt);
    const Tensor attn = nn::top_k_softmax(logits, k_eff, 1);
    if (weights) weights->push_back(attn);
    heads.push_back(nn::matmul(attn, head_cols(values, h, d.heads)));
  }
  return {concat_heads(heads)};
}

AssemblerStates read_step(const WorkspaceState& state, const AssemblerStates& assemblers, const WorkspaceParams& params,
                          std::vector<Tensor>* weights) {
  const auto& d = params.dims;
  expect_matrix(state.slots, d.slot_dim, "workspace state");
  expect_matrix(assemblers.states, d.assembler_dim, "assembler states");

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d.key_dim / d.heads));
  const Tensor queries = nn::matmul(assemblers.states, params.read_query);
  const Tensor keys = nn::matmul(state.slots, params.read_key);
  const Tensor values = nn::matmul(state.slots, params.read_value);

  std::vector<Tensor> heads;
  for (std::size_t h = 0; h < d.heads; ++h) {
    const Tensor logits =
        nn::scale(nn::matmul(head_cols(queries, h, d.heads), nn::transpose(head_cols(keys, h, d.heads))), inv_sqrt);
    const Tensor attn = nn::softmax(logits, 1);
    if (weights) weights->push_back(attn);
    heads.push_back(nn::matmul(attn, head_cols(values, h, d.heads)));
  }
  return {concat_heads(heads)};
}

AssemblerStates ff_update(const AssemblerStates& assemblers, const AssemblerStates& read_out,
                          const WorkspaceParams& params) {
  if (assemblers.states.shape() != read_out.states.shape()) {
    throw ShapeError("ff_update: assembler states " + nn::shape_to_string(assemblers.states.shape()) +
                     " vs read output " + nn::shape_to_string(read_out.states.shape()));
  }
  const Tensor h = params.norm_read(nn::add(assemblers.states, read_out.states));
  const Tensor ff = params.ff_out(nn::relu(params.ff_in(h)));
  return {params.norm_ff(nn::add(h, ff))};
}

BlockOutput workspace_block(const AssemblerStates& assemblers, const WorkspaceState& state,
                            const WorkspaceParams& params, std::size_t k, AttentionTrace* trace, std::size_t stage) {
  std::vector<Tensor> write_w, read_w;
  auto next_state = write_step(state, assemblers, params, k, trace ? &write_w : nullptr);
  auto read_out = read_step(next_state, assemblers, params, trace ? &read_w : nullptr);
  if (trace) {
    for (std::size_t h = 0; h < write_w.size(); ++h) trace->record("write", stage, h, write_w[h]);
    for (std::size_t h = 0; h < read_w.size(); ++h) trace->record("read", stage, h, read_w[h]);
  }
  return {ff_update(assemblers, read_out, params), std::move(next_state)};
}

}  // namespace ccs::workspace
