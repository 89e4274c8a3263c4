#include "ccs/geometry/ply.hpp"

#include <fstream>
#include <iomanip>

#include "ccs/errors.hpp"

namespace ccs::geometry {

void write_ply(std::ostream& out, const PointCloud& cloud, std::span<const int> part_ids) {
  if (!part_ids.empty() && part_ids.size() != cloud.size()) {
    throw ContractError("write_ply: " + std::to_string(part_ids.size()) + " part ids for " +
                        std::to_string(cloud.size()) + " points");
  }
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << cloud.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property int part_id\nend_header\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    out << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << (part_ids.empty() ? 0 : part_ids[i]) << '\n';
  }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, std::span<const int> part_ids) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_ply(out, cloud, part_ids);
}

}  // namespace ccs::geometry
