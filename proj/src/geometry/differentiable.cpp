#include "ccs/geometry/differentiable.hpp"

#include <string>

#include "ccs/errors.hpp"
#include "ccs/geometry/chamfer.hpp"
#include "ccs/nn/ops.hpp"

namespace ccs::geometry {

nn::Tensor chamfer_distance(const nn::Tensor& a, const nn::Tensor& b) {
  if (a.rank() != 2 || a.cols() != 3 || b.rank() != 2 || b.cols() != 3) {
    throw ShapeError("chamfer_distance expects [n×3] clouds, got " + nn::shape_to_string(a.shape()) + " and " +
                     nn::shape_to_string(b.shape()));
  }
  if (a.rows() == 0 || b.rows() == 0) throw ContractError("chamfer distance needs two non-empty clouds");
  auto forward = nearest_neighbors(a.data(), b.data());
  auto backward = nearest_neighbors(b.data(), a.data());
  double total = 0.0;
  for (const auto& n : forward) total += n.squared_distance;
  for (const auto& n : backward) total += n.squared_distance;
  return nn::detail::make_result(
      {}, {total}, {a, b}, [forward = std::move(forward), backward = std::move(backward)](nn::Node& self) {
        nn::Node& na = *self.inputs[0];
        nn::Node& nb = *self.inputs[1];
        const double g = self.grad[0];
        // d/dx ||x - y||² = 2(x - y), d/dy = -2(x - y)
        auto route = [g](const std::vector<Neighbor>& pairs, nn::Node& from, nn::Node& to) {
          std::vector<double>* gf = from.requires_grad ? &from.grad_buffer() : nullptr;
          std::vector<double>* gt = to.requires_grad ? &to.grad_buffer() : nullptr;
          for (std::size_t i = 0; i < pairs.size(); ++i) {
            const std::size_t j = pairs[i].index;
            for (int k = 0; k < 3; ++k) {
              const double diff = 2.0 * g * (from.value[3 * i + k] - to.value[3 * j + k]);
              if (gf) (*gf)[3 * i + k] += diff;
              if (gt) (*gt)[3 * j + k] -= diff;
            }
          }
        };
        route(forward, na, nb);
        route(backward, nb, na);
      });
}

nn::Tensor rotate_points(const nn::Tensor& points, const nn::Tensor& quaternion) {
  return nn::matmul(points, nn::transpose(nn::quat_to_matrix(quaternion)));
}

nn::Tensor transform_points(const nn::Tensor& points, const nn::Tensor& quaternion, const nn::Tensor& translation) {
  return nn::add_bias(rotate_points(points, quaternion), translation);
}


PoseTensors to_pose_tensors(std::span<const Pose> poses) {
  std::vector<double> r, t;
  for (const auto& p : poses) {
    r.insert(r.end(), {p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z});
    t.insert(t.end(), p.translation.begin(), p.translation.end());
  }
  return {nn::Tensor::from({poses.size(), 4}, std::move(r)), nn::Tensor::from({poses.size(), 3}, std::move(t))};
}

std::vector<Pose> to_poses(const PoseTensors& poses) {
  if (poses.rotations.rank() != 2 || poses.rotations.cols() != 4 || poses.translations.rank() != 2 ||
      poses.translations.cols() != 3 || poses.rotations.rows() != poses.translations.rows()) {
    throw ShapeError("pose tensors must be [N×4] and [N×3], got " + nn::shape_to_string(poses.rotations.shape()) +
                     " and " + nn::shape_to_string(poses.translations.shape()));
  }
  std::vector<Pose> out(poses.count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rotation = quat_normalize({poses.rotations.at(i, 0), poses.rotations.at(i, 1), poses.rotations.at(i, 2),
                                      poses.rotations.at(i, 3)});
    out[i].translation = {poses.translations.at(i, 0), poses.translations.at(i, 1), poses.translations.at(i, 2)};
  }
  return out;
}

std::vector<nn::Tensor> transform_parts(const PoseTensors& poses, std::span<const nn::Tensor> parts) {
  if (poses.count() != parts.size()) {
    throw ContractError("transform_parts: " + std::to_string(poses.count()) + " poses for " +
                        std::to_string(parts.size()) + " parts");
  }
  std::vector<nn::Tensor> out;
  out.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.push_back(transform_points(parts[i], nn::slice_rows(poses.rotations, i, i + 1),
                                   nn::slice_rows(poses.translations, i, i + 1)));
  }
  return out;
}

}  // namespace ccs::geometry
