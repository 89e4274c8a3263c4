#include "ccs/geometry/point_cloud.hpp"

#include <cmath>
#include <string>

#include "ccs/errors.hpp"

namespace ccs::geometry {

Vec3 Pose::apply(const Vec3& p) const {
  const auto r = rotate(rotation, p);
  return {r[0] + translation[0], r[1] + translation[1], r[2] + translation[2]};
}

Pose pose_inverse(const Pose& pose) {
  const auto inv = quat_conjugate(pose.rotation);
  const auto t = rotate(inv, pose.translation);
  return {inv, {-t[0], -t[1], -t[2]}};
}

Pose compose(const Pose& first, const Pose& second) {
  const auto q = quat_multiply(second.rotation, first.rotation);
  return {q, second.apply(first.translation)};
}

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw ContractError("point cloud must contain at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (double c : points_[i]) {
      if (!std::isfinite(c)) throw NumericError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
}

PointCloud PointCloud::from_tensor(const nn::Tensor& t) {
  if (t.rank() != 2 || t.cols() != 3) throw ShapeError("point cloud tensor must be [n×3], got " + nn::shape_to_string(t.shape()));
  std::vector<Vec3> pts(t.rows());
  const auto d = t.data();
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {d[3 * i], d[3 * i + 1], d[3 * i + 2]};
  return PointCloud(std::move(pts));
}

nn::Tensor PointCloud::to_tensor(bool requires_grad) const {
  std::vector<double> v;
  v.reserve(3 * points_.size());
  for (const auto& p : points_) v.insert(v.end(), p.begin(), p.end());
  return nn::Tensor::from({points_.size(), 3}, std::move(v), requires_grad);
}

Vec3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw ContractError("centroid of an empty cloud");
  Vec3 c{0, 0, 0};
  for (const auto& p : cloud)
    for (int k = 0; k < 3; ++k) c[k] += p[k];
  for (auto& v : c) v /= static_cast<double>(cloud.size());
  return c;
}

PointCloud apply_pose(const Pose& pose, const PointCloud& cloud) {
  const auto m = quat_to_matrix(pose.rotation);
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    const auto r = geometry::apply(m, p);
    out.push_back({r[0] + pose.translation[0], r[1] + pose.translation[1], r[2] + pose.translation[2]});
  }
  return PointCloud(std::move(out));
}

PointCloud rotate_cloud(const Quaternion& rotation, const PointCloud& cloud) {
  return apply_pose({rotation, {0, 0, 0}}, cloud);
}

PointCloud translate_cloud(const PointCloud& cloud, const Vec3& offset) {
  std::vector<Vec3> out(cloud.begin(), cloud.end());
  for (auto& p : out)
    for (int k = 0; k < 3; ++k) p[k] += offset[k];
  return PointCloud(std::move(out));
}

PointCloud concatenate(std::span<const PointCloud> clouds) {
  std::vector<Vec3> out;
  for (const auto& c : clouds) out.insert(out.end(), c.begin(), c.end());
  return PointCloud(std::move(out));
}

PointCloud assemble_shape(std::span<const Pose> poses, std::span<const PointCloud> clouds) {
  if (poses.size() != clouds.size()) {
    throw ContractError("assemble_shape: " + std::to_string(poses.size()) + " poses for " +
                        std::to_string(clouds.size()) + " clouds");
  }
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto posed = apply_pose(poses[i], clouds[i]);
    out.insert(out.end(), posed.begin(), posed.end());
  }
  return PointCloud(std::move(out));
}

std::vector<int> assembled_part_ids(std::span<const PointCloud> clouds) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < clouds.size(); ++i) ids.insert(ids.end(), clouds[i].size(), static_cast<int>(i));
  return ids;
}

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace ccs::geometry
