#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ccs/geometry/differentiable.hpp"
#include "ccs/nn/tensor.hpp"

namespace ccs::losses {

struct LossWeights {
  double collision = 0.10;   // w_c
  double translation = 1.0;  // w_t
  double rotation = 10.0;    // w_r
  double shape = 10.0;       // w_s
  double C = 30.0;
  double epsilon_d = 1e-6;
  // Replaces each pair term by max(0, term).
  bool clamp_collision = false;

  // Throws ParameterError on negative weights, C <= 0 or epsilon_d <= 0.
  void validate() const;
};

struct LossBreakdown {
  nn::Tensor collision;
  nn::Tensor translation;
  nn::Tensor rotation;
  nn::Tensor shape;
  nn::Tensor total;
};

// Pairwise centroid penalty over the rows of an [N×3] centroid matrix:
// 2/(N(N-1)) · Σ_{j<i} (1 - ln(C · max(|c_i - c_j|, epsilon_d))).
nn::Tensor collision_loss_from_centroids(const nn::Tensor& centroids, double C, double epsilon_d,
                                         bool clamp = false);
// Same penalty on the centroids of the posed part clouds.
nn::Tensor collision_loss(std::span<const nn::Tensor> pred_clouds, double C, double epsilon_d, bool clamp = false);

// Σ_i |T_i - T_i*|², no averaging.
nn::Tensor translation_loss(const nn::Tensor& pred_t, const nn::Tensor& gt_t);
// Σ_i chamfer(R_i(p_i), R_i*(p_i)); translations are not applied.
nn::Tensor rotation_chamfer_loss(const nn::Tensor& pred_r, const nn::Tensor& gt_r, std::span<const nn::Tensor> parts);
// chamfer(∪ Z_i(p_i), ∪ Z_i*(p_i)).
nn::Tensor shape_chamfer_loss(const geometry::PoseTensors& pred, const geometry::PoseTensors& gt,
                              std::span<const nn::Tensor> parts);

LossBreakdown total_loss(const geometry::PoseTensors& pred, const geometry::PoseTensors& gt,
                         std::span<const nn::Tensor> parts, const LossWeights& weights);

struct MonResult {
  LossBreakdown best;
  std::size_t best_index = 0;
  std::vector<double> totals;  // one per sample, in seed order
};

// Evaluates every seed and keeps the sample with the smallest total (lowest
// index on ties). Only the kept sample's graph reaches the caller, so the
// gradient flows through the argmin branch alone.
MonResult mon_loss(const std::function<LossBreakdown(std::uint64_t seed)>& sample, std::span<const std::uint64_t> seeds);

}  // namespace ccs::losses
