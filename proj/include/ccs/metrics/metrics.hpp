#pragma once

#include <cstddef>
#include <span>

#include "ccs/geometry/contact.hpp"
#include "ccs/geometry/point_cloud.hpp"

namespace ccs::metrics {

using geometry::Contact;
using geometry::PointCloud;
using geometry::Pose;

struct Thresholds {
  double part = 0.01;     // τ, on the mean-form Chamfer distance of one part
  double contact = 0.01;  // τ_c, on the squared contact distance
};

// Index of the smallest value; lowest index on ties.
std::size_t min_matching_select(std::span<const double> scds);

// Mean-form Chamfer distance between the assembled prediction and the
// assembled ground truth.
double shape_cd(std::span<const Pose> pred, std::span<const Pose> gt, std::span<const PointCloud> parts);

// Fraction of parts whose mean-form Chamfer distance to ground truth is below τ.
double part_accuracy(std::span<const Pose> pred, std::span<const Pose> gt, std::span<const PointCloud> parts,
                     double tau = 0.01);

struct ConnectivityResult {
  double accuracy = 1.0;
  // No contacts to check: accuracy is reported as 1.
  bool vacuous = false;
};

// Fraction of contacts with |Z_i(c_ij) - Z_j(c_ji)|² < τ_c.
ConnectivityResult connectivity_accuracy(std::span<const Pose> pred, std::span<const Contact> contacts,
                                         double tau_c = 0.01);

// RMSE over the 3N intrinsic-XYZ Euler components in degrees, each
// difference wrapped to (-180, 180].
double rmse_rotation(std::span<const Pose> pred, std::span<const Pose> gt);
// RMSE over the 3N translation components.
double rmse_translation(std::span<const Pose> pred, std::span<const Pose> gt);
// Mean geodesic rotation error in degrees.
double mean_geodesic_deg(std::span<const Pose> pred, std::span<const Pose> gt);

}  // namespace ccs::metrics
