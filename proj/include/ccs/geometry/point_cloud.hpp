#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ccs/geometry/quaternion.hpp"
#include "ccs/nn/tensor.hpp"

namespace ccs::geometry {

// Rigid transform x -> R·x + T.
struct Pose {
  Quaternion rotation;
  Vec3 translation{0.0, 0.0, 0.0};

  static Pose identity() { return {}; }
  Vec3 apply(const Vec3& p) const;
  bool operator==(const Pose&) const = default;
};

Pose pose_inverse(const Pose& pose);
// The pose that applies `first`, then `second`.
Pose compose(const Pose& first, const Pose& second);

// Non-empty set of finite 3D points.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points);

  static PointCloud from_tensor(const nn::Tensor& t);
  nn::Tensor to_tensor(bool requires_grad = false) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  bool operator==(const PointCloud&) const = default;

 private:
  std::vector<Vec3> points_;
};

Vec3 centroid(const PointCloud& cloud);
PointCloud apply_pose(const Pose& pose, const PointCloud& cloud);
PointCloud rotate_cloud(const Quaternion& rotation, const PointCloud& cloud);
PointCloud translate_cloud(const PointCloud& cloud, const Vec3& offset);
// Union of the posed clouds, part 0 first.
PointCloud assemble_shape(std::span<const Pose> poses, std::span<const PointCloud> clouds);
// Part index of every point of assemble_shape's output.
std::vector<int> assembled_part_ids(std::span<const PointCloud> clouds);
PointCloud concatenate(std::span<const PointCloud> clouds);

double squared_distance(const Vec3& a, const Vec3& b);

}  // namespace ccs::geometry
