#pragma once

#include <span>
#include <vector>

#include "ccs/geometry/point_cloud.hpp"
#include "ccs/nn/tensor.hpp"

// Graph-recording counterparts of the geometry operations, used by the losses.
namespace ccs::geometry {

// Sum-form Chamfer distance between [n×3] and [m×3] tensors. The gradient is
// taken with the nearest-neighbor assignment held fixed.
nn::Tensor chamfer_distance(const nn::Tensor& a, const nn::Tensor& b);

// points·R(q)ᵀ for an [n×3] cloud and a 4-entry unit quaternion.
nn::Tensor rotate_points(const nn::Tensor& points, const nn::Tensor& quaternion);
// rotate_points followed by adding a 3-entry translation.
nn::Tensor transform_points(const nn::Tensor& points, const nn::Tensor& quaternion, const nn::Tensor& translation);

// Per-part poses as graph tensors: rotations [N×4] (w, x, y, z), translations [N×3].
struct PoseTensors {
  nn::Tensor rotations;
  nn::Tensor translations;

  std::size_t count() const { return rotations.rows(); }
};

PoseTensors to_pose_tensors(std::span<const Pose> poses);
// Detached values; rotations are passed through quat_normalize.
std::vector<Pose> to_poses(const PoseTensors& poses);

// Part i moved by pose i, one [n_i×3] tensor per part.
std::vector<nn::Tensor> transform_parts(const PoseTensors& poses, std::span<const nn::Tensor> parts);

}  // namespace ccs::geometry
