#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace ccs::trainer {

struct ScalingConfig {
  std::vector<std::size_t> ns{16, 32, 64, 128};
  // Shared width of assemblers, slots and keys for both blocks.
  std::size_t dim = 8;
  std::size_t slots = 8;
  std::size_t heads = 1;
  std::size_t k = 10;
  // Each timing is the minimum over this many measurements.
  std::size_t repetitions = 9;
  // One measurement repeats the call until at least this much time passed.
  double min_measure_seconds = 0.02;
  std::uint64_t seed = 0;
};

struct ScalingPoint {
  std::size_t n = 0;
  double workspace_seconds = 0;  // one forward call
  double reference_seconds = 0;
};

struct ScalingResult {
  ScalingConfig config;
  std::vector<ScalingPoint> points;
  double workspace_slope = 0;
  double reference_slope = 0;

  // "n,workspace_seconds,reference_seconds" rows, then "# slope" comments.
  void write_csv(std::ostream& out) const;
};

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

// Times one gradient-free forward of the workspace block and of the pairwise
// self-attention reference for every N.
ScalingResult bench_scaling(const ScalingConfig& config);

}  // namespace ccs::trainer
