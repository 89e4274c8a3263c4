#include "ccs/geometry/chamfer.hpp"

#include <limits>

#include "ccs/errors.hpp"

namespace ccs::geometry {

namespace {

std::span<const double> flat(const PointCloud& c) {
  return {c.points().front().data(), 3 * c.size()};
}

double directed_sum(std::span<const double> from, std::span<const double> to) {
  double total = 0.0;
  for (const auto& n : nearest_neighbors(from, to)) total += n.squared_distance;
  return total;
}

void require_nonempty(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw ContractError("chamfer distance needs two non-empty clouds");
}

}  // namespace

std::vector<Neighbor> nearest_neighbors(std::span<const double> query, std::span<const double> reference) {
  const std::size_t n = query.size() / 3, m = reference.size() / 3;
  if (m == 0) throw ContractError("nearest_neighbors: empty reference set");
  std::vector<Neighbor> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double qx = query[3 * i], qy = query[3 * i + 1], qz = query[3 * i + 2];
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = qx - reference[3 * j], dy = qy - reference[3 * j + 1], dz = qz - reference[3 * j + 2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out[i] = {best, best_d};
  }
  return out;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a, b);
  return directed_sum(flat(a), flat(b)) + directed_sum(flat(b), flat(a));
}

double chamfer_distance_mean(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a, b);
  return directed_sum(flat(a), flat(b)) / static_cast<double>(a.size()) +
         directed_sum(flat(b), flat(a)) / static_cast<double>(b.size());
}

}  // namespace ccs::geometry
