#pragma once

// Reference Chamfer distance written independently of the library's
// nearest-neighbor search: plain nested loops over coordinates.

#include <limits>

#include "ccs/geometry/point_cloud.hpp"

namespace ccs::testing {

inline double brute_force_directed(const geometry::PointCloud& from, const geometry::PointCloud& to) {
  double total = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::max();
    for (const auto& q : to) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += (p[k] - q[k]) * (p[k] - q[k]);
      if (d < best) best = d;
    }
    total += best;
  }
  return total;
}

inline double brute_force_chamfer(const geometry::PointCloud& a, const geometry::PointCloud& b) {
  return brute_force_directed(a, b) + brute_force_directed(b, a);
}

}  // namespace ccs::testing
