#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ccs/geometry/contact.hpp"
#include "ccs/geometry/point_cloud.hpp"
#include "json.hpp"

namespace ccs::dataset {

using geometry::Contact;
using geometry::PointCloud;
using geometry::Pose;

struct ShapeRecord {
  std::string shape_id;
  std::string category;             // primitive name
  std::vector<PointCloud> parts;    // canonical frame, zero centroid
  std::vector<Pose> gt_poses;       // canonical -> assembled frame
  std::vector<Contact> contacts;

  std::size_t part_count() const { return parts.size(); }
  bool operator==(const ShapeRecord&) const = default;
};

struct GenConfig {
  // Any of "box", "cylinder", "sphere-shell"; one is drawn per shape.
  std::vector<std::string> primitives{"box", "cylinder", "sphere-shell"};
  std::size_t min_cuts = 1;   // planes always applied
  std::size_t max_cuts = 64;  // upper bound while chasing the drawn part count
  std::size_t min_parts = 2;
  std::size_t max_parts = 20;
  std::size_t n_pc = 1000;
  // Dense sample size; 0 picks 2 · max_parts · n_pc.
  std::size_t dense_points = 0;
  double jitter = 0.0;             // std-dev of Gaussian noise on dense points
  double contact_distance = 0.02;
  std::size_t count = 64;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;

  // Throws ParameterError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const GenConfig& config);
GenConfig gen_config_from_json(const nlohmann::json& j);

struct GeneratedShape {
  ShapeRecord record;
  // The resampled parts in the assembled frame, before canonicalization.
  std::vector<PointCloud> source_parts;
};

// Samples a primitive, cuts it with random planes into connected pieces,
// merges pieces until the drawn part count (and the n_pc minimum size) is
// met, resamples every part to n_pc points, extracts contacts and
// canonicalizes. Canonical coordinates lie on a 2^-20 grid, so they are exact
// in float32 and their centroid is exactly zero.
GeneratedShape generate_shape_with_source(const GenConfig& config, std::uint64_t seed);
ShapeRecord generate_shape(const GenConfig& config, std::uint64_t seed);

// `config.count` shapes; shape s uses seed mix_seed(config.seed, s). Work is
// spread over `threads` workers (0: hardware concurrency); the result does
// not depend on the thread count.
std::vector<ShapeRecord> generate_dataset(const GenConfig& config, std::size_t threads = 0);

}  // namespace ccs::dataset
