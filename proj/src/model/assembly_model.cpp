#include "ccs/model/assembly_model.hpp"

#include "ccs/errors.hpp"
#include "ccs/nn/ops.hpp"
#include "ccs/nn/rng.hpp"

namespace ccs::model {

using nn::Tensor;
using workspace::AssemblerStates;

namespace {
constexpr double kRefinementHeadScale = 0.01;
}  // namespace

AssemblyModel::AssemblyModel(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  nn::Rng rng(init_seed);
  for (std::size_t s = 0; s < config_.ctf_stages; ++s) {
    const std::string prefix = config_.ctf_stages > 1 ? "ctf" + std::to_string(s) + "." : "";
    networks_.push_back(build_network(prefix, s > 0, rng));
  }
}

Network AssemblyModel::build_network(const std::string& prefix, bool refinement, nn::Rng& rng) {
  const auto& c = config_;
  const auto dims = c.workspace_dims();
  Network net;

  std::size_t in = 3;
  std::vector<std::size_t> widths = c.encoder_widths;
  widths.push_back(c.d_a);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    net.encoder.push_back(nn::make_linear(params_, prefix + "encoder." + std::to_string(i), in, widths[i], rng));
    in = widths[i];
  }

  net.noise_projection = nn::make_linear(params_, prefix + "routing.noise_projection", c.d_a + c.noise_dim, c.d_a, rng);
  net.routing = workspace::make_workspace_params(params_, prefix + "routing", dims, rng);
  net.routing_slots = workspace::make_initial_state(params_, prefix + "routing", dims, rng);

  for (std::size_t t = 0; t < c.stages; ++t) {
    net.stages.push_back(workspace::make_workspace_params(params_, prefix + "workspace.stage" + std::to_string(t), dims, rng));
  }
  net.initial_slots = workspace::make_initial_state(params_, prefix + "workspace", dims, rng);

  in = c.d_a;
  widths = c.predictor_widths;
  widths.push_back(7);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    net.predictor.push_back(nn::make_linear(params_, prefix + "predictor." + std::to_string(i), in, widths[i], rng));
    in = widths[i];
  }
  // Start every head near the identity rotation and zero translation.
  auto bias = net.predictor.back().bias.mutable_data();
  for (std::size_t i = 0; i < 7; ++i) bias[i] = i == 0 ? 1.0 : 0.0;
  // Refinement stages start close to the identity pose so they begin by
  // passing the previous stage's result through.
  if (refinement) {
    for (auto& w : net.predictor.back().weight.mutable_data()) w *= kRefinementHeadScale;
  }
  return net;
}

void AssemblyModel::check_parts(std::span<const Tensor> clouds) const {
  if (clouds.size() < 2 || clouds.size() > config_.max_parts) {
    throw ContractError("model expects between 2 and " + std::to_string(config_.max_parts) + " parts, got " +
                        std::to_string(clouds.size()));
  }
}

AssemblerStates AssemblyModel::encode_parts(std::span<const Tensor> clouds, std::size_t network) const {
  if (clouds.empty()) throw ContractError("encode_parts: no parts");
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    if (clouds[i].rank() != 2 || clouds[i].cols() != 3 || clouds[i].rows() != config_.n_pc) {
      throw ContractError("part " + std::to_string(i) + " has shape " + nn::shape_to_string(clouds[i].shape()) +
                          ", expected [" + std::to_string(config_.n_pc) + "x3]");
    }
  }
  const auto& net = networks_.at(network);
  Tensor x = nn::concat_rows(std::vector<Tensor>(clouds.begin(), clouds.end()));
  for (std::size_t i = 0; i < net.encoder.size(); ++i) {
    x = net.encoder[i](x);
    if (i + 1 < net.encoder.size()) x = nn::relu(x);
  }
  return {nn::segment_max_rows(x, config_.n_pc)};
}

AssemblerStates AssemblyModel::route(const AssemblerStates& features, const Tensor& noise, std::size_t network,
                                     workspace::AttentionTrace* trace) const {
  if (noise.rank() != 2 || noise.rows() != features.count() || noise.cols() != config_.noise_dim) {
    throw ShapeError("routing noise must be [" + std::to_string(features.count()) + "x" +
                     std::to_string(config_.noise_dim) + "], got " + nn::shape_to_string(noise.shape()));
  }
  const auto& net = networks_.at(network);
  const AssemblerStates projected{net.noise_projection(nn::concat_cols(features.states, noise))};
  if (trace) trace->set_block("routing");
  auto out = workspace::workspace_block(projected, net.routing_slots, net.routing, config_.k, trace, 0);
  return out.assemblers;
}

PosePrediction AssemblyModel::predict_poses(const AssemblerStates& assemblers, std::size_t network) const {
  const auto& net = networks_.at(network);
  Tensor x = assemblers.states;
  for (std::size_t i = 0; i < net.predictor.size(); ++i) {
    x = net.predictor[i](x);
    if (i + 1 < net.predictor.size()) x = nn::relu(x);
  }
  PosePrediction p;
  p.raw_head_output = x;
  p.poses.rotations = nn::normalize_rows(nn::slice_cols(x, 0, 4));
  p.poses.translations = nn::slice_cols(x, 4, 7);
  return p;
}

Tensor AssemblyModel::sample_noise(std::size_t parts, std::uint64_t seed) const {
  nn::Rng rng(seed);
  auto values = rng.normal_vector(parts * config_.noise_dim);
  for (auto& v : values) v *= config_.noise_scale;
  return Tensor::from({parts, config_.noise_dim}, std::move(values));
}

PosePrediction AssemblyModel::forward_with_noise(std::span<const Tensor> clouds, const Tensor& noise,
                                                 std::size_t network, workspace::AttentionTrace* trace) const {
  check_parts(clouds);
  const auto& net = networks_.at(network);
  AssemblerStates a = route(encode_parts(clouds, network), noise, network, trace);
  workspace::WorkspaceState state = net.initial_slots;
  if (trace) trace->set_block("workspace");
  for (std::size_t t = 0; t < net.stages.size(); ++t) {
    auto out = workspace::workspace_block(a, state, net.stages[t], config_.k, trace, t);
    a = std::move(out.assemblers);
    state = std::move(out.state);
  }
  return predict_poses(a, network);
}

PosePrediction AssemblyModel::forward(std::span<const Tensor> clouds, std::uint64_t seed,
                                      workspace::AttentionTrace* trace) const {
  return forward_with_noise(clouds, sample_noise(clouds.size(), seed), 0, trace);
}

PosePrediction AssemblyModel::coarse_to_fine(std::span<const Tensor> clouds, std::uint64_t seed,
                                             workspace::AttentionTrace* trace, std::size_t networks) const {
  if (networks > networks_.size()) {
    throw ContractError("coarse_to_fine: asked for " + std::to_string(networks) + " networks, the model has " +
                        std::to_string(networks_.size()));
  }
  const std::size_t count = networks == 0 ? networks_.size() : networks;
  PosePrediction result = forward(clouds, seed, trace);
  if (count == 1) return result;

  const std::size_t n = clouds.size();
  geometry::PoseTensors total = result.poses;
  std::vector<Tensor> current = geometry::transform_parts(total, clouds);
  for (std::size_t s = 1; s < count; ++s) {
    const auto step = forward_with_noise(current, sample_noise(n, nn::mix_seed(seed, s)), s, trace).poses;
    // Applying `total` then `step`: q = q_step ⊗ q_total, t = R_step·t_total + t_step.
    std::vector<Tensor> moved;
    for (std::size_t i = 0; i < n; ++i) {
      moved.push_back(geometry::rotate_points(nn::slice_rows(total.translations, i, i + 1),
                                              nn::slice_rows(step.rotations, i, i + 1)));
    }
    total = {nn::quat_mul_rows(step.rotations, total.rotations), nn::add(nn::concat_rows(moved), step.translations)};
    if (s + 1 < count) current = geometry::transform_parts(step, current);
  }
  return {total, Tensor()};
}

std::size_t AssemblyModel::network_of(const std::string& name) const {
  if (networks_.size() == 1) return 0;
  if (name.rfind("ctf", 0) != 0) throw ContractError("network_of: " + name + " has no stage prefix");
  return std::stoul(name.substr(3, name.find('.') - 3));
}

std::vector<Tensor> clouds_to_tensors(std::span<const geometry::PointCloud> clouds) {
  std::vector<Tensor> out;
  out.reserve(clouds.size());
  for (const auto& c : clouds) out.push_back(c.to_tensor());
  return out;
}

}  // namespace ccs::model
