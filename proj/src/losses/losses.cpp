#include "ccs/losses/losses.hpp"

#include <string>

#include "ccs/errors.hpp"
#include "ccs/nn/ops.hpp"

namespace ccs::losses {

using nn::Tensor;

void LossWeights::validate() const {
  if (collision < 0 || translation < 0 || rotation < 0 || shape < 0) {
    throw ParameterError("loss weights must be non-negative");
  }
  if (!(C > 0)) throw ParameterError("collision constant C must be positive");
  if (!(epsilon_d > 0)) throw ParameterError("epsilon_d must be positive");
}

Tensor collision_loss_from_centroids(const Tensor& centroids, double C, double epsilon_d, bool clamp) {
  if (centroids.rank() != 2 || centroids.cols() != 3) {
    throw ShapeError("collision loss expects [N×3] centroids, got " + nn::shape_to_string(centroids.shape()));
  }
  const std::size_t n = centroids.rows();
  if (n < 2) throw ContractError("collision loss needs at least 2 parts, got " + std::to_string(n));

  std::vector<Tensor> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(nn::slice_rows(centroids, i, i + 1));
  Tensor total;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const Tensor d = nn::norm(nn::sub(rows[i], rows[j]), epsilon_d);
      Tensor term = nn::add_scalar(nn::scale(nn::log(nn::scale(d, C)), -1.0), 1.0);
      if (clamp) term = nn::clamp_min(term, 0.0);
      total = total.defined() ? nn::add(total, term) : term;
    }
  }
  return nn::scale(total, 2.0 / static_cast<double>(n * (n - 1)));
}

Tensor collision_loss(std::span<const Tensor> pred_clouds, double C, double epsilon_d, bool clamp) {
  if (pred_clouds.size() < 2) {
    throw ContractError("collision loss needs at least 2 parts, got " + std::to_string(pred_clouds.size()));
  }
  std::vector<Tensor> centroids;
  for (const auto& cloud : pred_clouds) centroids.push_back(nn::reshape(nn::mean_rows(cloud), {1, 3}));
  return collision_loss_from_centroids(nn::concat_rows(centroids), C, epsilon_d, clamp);
}

Tensor translation_loss(const Tensor& pred_t, const Tensor& gt_t) {
  if (pred_t.shape() != gt_t.shape()) {
    throw ShapeError("translation loss: " + nn::shape_to_string(pred_t.shape()) + " vs " +
                     nn::shape_to_string(gt_t.shape()));
  }
  return nn::sum(nn::square(nn::sub(pred_t, gt_t)));
}

Tensor rotation_chamfer_loss(const Tensor& pred_r, const Tensor& gt_r, std::span<const Tensor> parts) {
  if (pred_r.rows() != parts.size() || gt_r.rows() != parts.size()) {
    throw ContractError("rotation loss: rotation count does not match part count");
  }
  Tensor total;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor pred = geometry::rotate_points(parts[i], nn::slice_rows(pred_r, i, i + 1));
    const Tensor gt = geometry::rotate_points(parts[i], nn::slice_rows(gt_r, i, i + 1));
    const Tensor term = geometry::chamfer_distance(pred, gt);
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

Tensor shape_chamfer_loss(const geometry::PoseTensors& pred, const geometry::PoseTensors& gt,
                          std::span<const Tensor> parts) {
  return geometry::chamfer_distance(nn::concat_rows(geometry::transform_parts(pred, parts)),
                                    nn::concat_rows(geometry::transform_parts(gt, parts)));
}

LossBreakdown total_loss(const geometry::PoseTensors& pred, const geometry::PoseTensors& gt,
                         std::span<const Tensor> parts, const LossWeights& weights) {
  weights.validate();
  LossBreakdown out;
  const auto posed = geometry::transform_parts(pred, parts);
  out.collision = collision_loss(posed, weights.C, weights.epsilon_d, weights.clamp_collision);
  out.translation = translation_loss(pred.translations, gt.translations);
  out.rotation = rotation_chamfer_loss(pred.rotations, gt.rotations, parts);
  out.shape = geometry::chamfer_distance(nn::concat_rows(posed), nn::concat_rows(geometry::transform_parts(gt, parts)));
  out.total = nn::add(nn::add(nn::scale(out.collision, weights.collision), nn::scale(out.translation, weights.translation)),
                      nn::add(nn::scale(out.rotation, weights.rotation), nn::scale(out.shape, weights.shape)));
  return out;
}

MonResult mon_loss(const std::function<LossBreakdown(std::uint64_t seed)>& sample, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ParameterError("mon_loss needs at least one seed");
  MonResult result;
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    auto loss = sample(seeds[j]);
    const double value = loss.total.item();
    result.totals.push_back(value);
    if (j == 0 || value < result.totals[result.best_index]) {
      result.best = std::move(loss);
      result.best_index = j;
    }
  }
  return result;
}

}  // namespace ccs::losses
