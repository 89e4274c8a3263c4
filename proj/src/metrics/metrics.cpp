#include "ccs/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccs/errors.hpp"
#include "ccs/geometry/chamfer.hpp"

namespace ccs::metrics {

namespace {

void check_counts(std::size_t pred, std::size_t gt, const char* what) {
  if (pred != gt || pred == 0) {
    throw ContractError(std::string(what) + ": " + std::to_string(pred) + " predicted vs " + std::to_string(gt) +
                        " ground-truth poses");
  }
}

}  // namespace

std::size_t min_matching_select(std::span<const double> scds) {
  if (scds.empty()) throw ContractError("min_matching_select: no samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scds.size(); ++i)
    if (scds[i] < scds[best]) best = i;
  return best;
}

double shape_cd(std::span<const Pose> pred, std::span<const Pose> gt, std::span<const PointCloud> parts) {
  check_counts(pred.size(), gt.size(), "shape_cd");
  return geometry::chamfer_distance_mean(geometry::assemble_shape(pred, parts), geometry::assemble_shape(gt, parts));
}

double part_accuracy(std::span<const Pose> pred, std::span<const Pose> gt, std::span<const PointCloud> parts,
                     double tau) {
  check_counts(pred.size(), gt.size(), "part_accuracy");
  if (parts.size() != pred.size()) throw ContractError("part_accuracy: pose count does not match part count");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double cd =
        geometry::chamfer_distance_mean(geometry::apply_pose(pred[i], parts[i]), geometry::apply_pose(gt[i], parts[i]));
    correct += cd < tau;
  }
  return static_cast<double>(correct) / static_cast<double>(parts.size());
}

ConnectivityResult connectivity_accuracy(std::span<const Pose> pred, std::span<const Contact> contacts, double tau_c) {
  if (contacts.empty()) return {1.0, true};
  std::size_t correct = 0;
  for (const auto& c : contacts) {
    if (c.i >= pred.size() || c.j >= pred.size()) {
      throw ContractError("contact refers to part " + std::to_string(std::max(c.i, c.j)) + " of " +
                          std::to_string(pred.size()));
    }
    correct += geometry::squared_distance(pred[c.i].apply(c.on_i), pred[c.j].apply(c.on_j)) < tau_c;
  }
  return {static_cast<double>(correct) / static_cast<double>(contacts.size()), false};
}

double rmse_rotation(std::span<const Pose> pred, std::span<const Pose> gt) {
  check_counts(pred.size(), gt.size(), "rmse_rotation");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto a = geometry::quat_to_euler_deg(pred[i].rotation);
    const auto b = geometry::quat_to_euler_deg(gt[i].rotation);
    for (int k = 0; k < 3; ++k) {
      const double d = geometry::wrap_degrees(a[k] - b[k]);
      sq += d * d;
    }
  }
  return std::sqrt(sq / static_cast<double>(3 * pred.size()));
}

double rmse_translation(std::span<const Pose> pred, std::span<const Pose> gt) {
  check_counts(pred.size(), gt.size(), "rmse_translation");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double d = pred[i].translation[k] - gt[i].translation[k];
      sq += d * d;
    }
  return std::sqrt(sq / static_cast<double>(3 * pred.size()));
}

double mean_geodesic_deg(std::span<const Pose> pred, std::span<const Pose> gt) {
  check_counts(pred.size(), gt.size(), "mean_geodesic_deg");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += geometry::geodesic_angle_deg(pred[i].rotation, gt[i].rotation);
  return total / static_cast<double>(pred.size());
}

}  // namespace ccs::metrics
