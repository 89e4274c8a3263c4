#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ccs/metrics/metrics.hpp"

namespace ccs::metrics {

struct ShapeMetrics {
  std::string shape_id;
  std::size_t parts = 0;
  std::size_t sample = 0;  // index chosen by minimum matching
  double scd = 0.0;
  double pa = 0.0;
  double ca = 0.0;
  bool ca_vacuous = false;
  double rmse_r = 0.0;  // degrees
  double rmse_t = 0.0;
  double geodesic = 0.0;  // degrees
};

// All metrics for one candidate assembly.
ShapeMetrics score_shape(std::span<const Pose> pred, std::span<const Pose> gt, std::span<const PointCloud> parts,
                         std::span<const Contact> contacts, const Thresholds& thresholds);

// Scores every candidate and keeps the one with the smallest SCD.
ShapeMetrics score_min_matching(std::span<const std::vector<Pose>> candidates, std::span<const Pose> gt,
                                std::span<const PointCloud> parts, std::span<const Contact> contacts,
                                const Thresholds& thresholds);

struct MetricsReport {
  Thresholds thresholds;
  std::vector<ShapeMetrics> shapes;
  // Means over shapes.
  ShapeMetrics aggregate;
  std::vector<std::string> warnings;

  // Header comments with thresholds and conventions, one row per shape, then
  // a "mean" row. Values printed with 17 significant digits.
  void write_csv(std::ostream& os) const;
  // Human-readable table; SCD shown ×10³.
  void write_table(std::ostream& os) const;
};

// Fills the aggregate and a warning for every shape without contacts.
MetricsReport make_report(std::vector<ShapeMetrics> shapes, const Thresholds& thresholds);

}  // namespace ccs::metrics
