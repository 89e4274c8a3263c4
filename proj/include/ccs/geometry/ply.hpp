#pragma once

#include <filesystem>
#include <ostream>
#include <span>

#include "ccs/geometry/point_cloud.hpp"

namespace ccs::geometry {

// ASCII PLY: float x/y/z plus an int `part_id` per vertex. part_ids must be
// empty (all zero) or match the cloud size.
void write_ply(std::ostream& out, const PointCloud& cloud, std::span<const int> part_ids);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, std::span<const int> part_ids);

}  // namespace ccs::geometry
