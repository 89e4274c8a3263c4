#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccs/geometry/differentiable.hpp"
#include "ccs/geometry/point_cloud.hpp"
#include "ccs/model/config.hpp"
#include "ccs/nn/layers.hpp"
#include "ccs/nn/parameters.hpp"
#include "ccs/workspace/trace.hpp"
#include "ccs/workspace/workspace.hpp"

namespace ccs::model {

struct PosePrediction {
  // Unit rotations [N×4] and translations [N×3], both graph-attached.
  geometry::PoseTensors poses;
  // Head output before quaternion normalization, [N×7]. Empty for composed
  // coarse-to-fine predictions.
  nn::Tensor raw_head_output;

  std::vector<geometry::Pose> values() const { return geometry::to_poses(poses); }
};

// One network: encoder, routing block, T workspace stages and pose head.
struct Network {
  std::vector<nn::Linear> encoder;
  nn::Linear noise_projection;
  workspace::WorkspaceParams routing;
  workspace::WorkspaceState routing_slots;
  std::vector<workspace::WorkspaceParams> stages;
  workspace::WorkspaceState initial_slots;
  std::vector<nn::Linear> predictor;
};

class AssemblyModel {
 public:
  // Parameters are drawn from a stream seeded with `init_seed`. With
  // ctf_stages = x > 1 the x networks are registered under "ctf<s>."; the
  // final head layer of stages 1..x-1 starts scaled down by 100.
  AssemblyModel(ModelConfig config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  std::size_t network_count() const { return networks_.size(); }

  // Shared per-point MLP, then max-pool per part: [N×d_a].
  workspace::AssemblerStates encode_parts(std::span<const nn::Tensor> clouds, std::size_t network = 0) const;
  // Appends noise to every feature row, projects back to d_a and runs the
  // routing block.
  workspace::AssemblerStates route(const workspace::AssemblerStates& features, const nn::Tensor& noise,
                                   std::size_t network = 0, workspace::AttentionTrace* trace = nullptr) const;
  PosePrediction predict_poses(const workspace::AssemblerStates& assemblers, std::size_t network = 0) const;

  // [N×noise_dim] routing noise: noise_scale · N(0, 1) from a stream seeded with `seed`.
  nn::Tensor sample_noise(std::size_t parts, std::uint64_t seed) const;

  // encode -> route -> T stages -> predict, with explicit noise.
  PosePrediction forward_with_noise(std::span<const nn::Tensor> clouds, const nn::Tensor& noise,
                                    std::size_t network = 0, workspace::AttentionTrace* trace = nullptr) const;
  // Single network (the first), noise drawn from `seed`.
  PosePrediction forward(std::span<const nn::Tensor> clouds, std::uint64_t seed,
                         workspace::AttentionTrace* trace = nullptr) const;
  // Runs the first `networks` networks (0: all) in turn on the clouds moved
  // by the poses so far and composes the stage poses, first stage applied
  // first. With one network this is forward().
  PosePrediction coarse_to_fine(std::span<const nn::Tensor> clouds, std::uint64_t seed,
                                workspace::AttentionTrace* trace = nullptr, std::size_t networks = 0) const;
  // The prediction used for training and evaluation: coarse_to_fine.
  PosePrediction predict(std::span<const nn::Tensor> clouds, std::uint64_t seed,
                         workspace::AttentionTrace* trace = nullptr, std::size_t networks = 0) const {
    return coarse_to_fine(clouds, seed, trace, networks);
  }
  // Index of the network owning parameter `name`.
  std::size_t network_of(const std::string& name) const;

 private:
  void check_parts(std::span<const nn::Tensor> clouds) const;
  Network build_network(const std::string& prefix, bool refinement, nn::Rng& rng);

  ModelConfig config_;
  nn::ParameterSet params_;
  std::vector<Network> networks_;
};

std::vector<nn::Tensor> clouds_to_tensors(std::span<const geometry::PointCloud> clouds);

}  // namespace ccs::model
