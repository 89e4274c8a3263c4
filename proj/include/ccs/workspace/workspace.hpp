#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ccs/nn/layers.hpp"
#include "ccs/nn/parameters.hpp"
#include "ccs/nn/tensor.hpp"
#include "ccs/workspace/trace.hpp"

namespace ccs::workspace {

// Shared slot memory, [L×d_l].
struct WorkspaceState {
  nn::Tensor slots;

  std::size_t slot_count() const { return slots.rows(); }
  std::size_t slot_dim() const { return slots.cols(); }
};

// One row per assembler, [N×d_a].
struct AssemblerStates {
  nn::Tensor states;

  std::size_t count() const { return states.rows(); }
  std::size_t dim() const { return states.cols(); }
};

struct WorkspaceDims {
  std::size_t slots = 8;           // L
  std::size_t slot_dim = 128;      // d_l
  std::size_t assembler_dim = 128; // d_a
  std::size_t key_dim = 128;       // d_e
  std::size_t heads = 4;

  // Throws ParameterError on zero sizes or when heads does not divide
  // d_e, d_l and d_a.
  void validate() const;
};

// Projections are stored whole; head h uses the h-th block of columns.
struct WorkspaceParams {
  nn::Tensor write_query;  // [d_l×d_e]
  nn::Tensor write_key;    // [d_a×d_e]
  nn::Tensor write_value;  // [d_a×d_l]
  nn::Tensor read_query;   // [d_a×d_e]
  nn::Tensor read_key;     // [d_l×d_e]
  nn::Tensor read_value;   // [d_l×d_a]
  nn::Linear ff_in;        // d_a -> 4·d_a
  nn::Linear ff_out;       // 4·d_a -> d_a
  nn::LayerNorm norm_read;
  nn::LayerNorm norm_ff;
  WorkspaceDims dims;
};

WorkspaceParams make_workspace_params(nn::ParameterSet& params, const std::string& prefix, const WorkspaceDims& dims,
                                      nn::Rng& rng);
// Learned initial slots R_0, registered as `<prefix>.initial_slots`.
WorkspaceState make_initial_state(nn::ParameterSet& params, const std::string& prefix, const WorkspaceDims& dims,
                                  nn::Rng& rng);

// Competitive write. Every slot attends over the N messages with a top-k'
// softmax, k' = min(k, N); the result replaces the slots. Per-head [L×N]
// weights are appended to `weights` when given.
WorkspaceState write_step(const WorkspaceState& state, const AssemblerStates& messages, const WorkspaceParams& params,
                          std::size_t k, std::vector<nn::Tensor>* weights = nullptr);

// Broadcast read: every assembler attends over all L slots. Per-head [N×L]
// weights are appended to `weights` when given.
AssemblerStates read_step(const WorkspaceState& state, const AssemblerStates& assemblers, const WorkspaceParams& params,
                          std::vector<nn::Tensor>* weights = nullptr);

// h = LN(a + read_out); returns LN(h + FF(h)).
AssemblerStates ff_update(const AssemblerStates& assemblers, const AssemblerStates& read_out,
                          const WorkspaceParams& params);

struct BlockOutput {
  AssemblerStates assemblers;
  WorkspaceState state;
};

// One stage: write with the assembler states as messages, read, update.
// `trace`, when given, receives the write and read weights of every head
// under `stage`.
BlockOutput workspace_block(const AssemblerStates& assemblers, const WorkspaceState& state,
                            const WorkspaceParams& params, std::size_t k, AttentionTrace* trace = nullptr,
                            std::size_t stage = 0);

}  // namespace ccs::workspace
