#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ccs/losses/losses.hpp"
#include "ccs/workspace/workspace.hpp"
#include "json.hpp"

namespace ccs::model {

struct ModelConfig {
  std::size_t n_pc = 1000;
  std::size_t d_a = 128;
  std::size_t d_l = 128;
  std::size_t d_e = 128;
  std::size_t slots = 8;      // L
  std::size_t heads = 4;
  std::size_t stages = 4;     // T
  std::size_t k = 10;
  std::size_t noise_dim = 32;
  // Standard deviation of the routing noise z.
  double noise_scale = 1.0;
  std::size_t ctf_stages = 1;  // x
  std::size_t max_parts = 20;
  std::vector<std::size_t> encoder_widths{64, 128};
  std::vector<std::size_t> predictor_widths{256};
  losses::LossWeights loss;

  // Throws ParameterError naming the offending field.
  void validate() const;
  workspace::WorkspaceDims workspace_dims() const;
};

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys and wrong types raise
// ParseError naming the field.
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace ccs::model
