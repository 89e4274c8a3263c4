#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ccs/geometry/point_cloud.hpp"

namespace ccs::geometry {

struct Neighbor {
  std::size_t index;
  double squared_distance;
};

// Exact brute-force nearest neighbor in `reference` for every query point
// (both flat xyz arrays). Ties resolve to the lowest reference index.
std::vector<Neighbor> nearest_neighbors(std::span<const double> query, std::span<const double> reference);

// Σ_a min_b ||a-b||² + Σ_b min_a ||a-b||², no averaging.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// mean_a min_b ||a-b||² + mean_b min_a ||a-b||². For equally sized clouds
// this is chamfer_distance divided by the per-cloud point count.
double chamfer_distance_mean(const PointCloud& a, const PointCloud& b);

}  // namespace ccs::geometry
