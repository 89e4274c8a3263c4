#pragma once

#include <cstddef>

#include "ccs/geometry/quaternion.hpp"

namespace ccs::geometry {

// Ground-truth contact between parts i and j: point on part i and the
// matching point on part j, each in its part's canonical frame.
struct Contact {
  std::size_t i = 0;
  std::size_t j = 0;
  Vec3 on_i{0, 0, 0};
  Vec3 on_j{0, 0, 0};

  bool operator==(const Contact&) const = default;
};

}  // namespace ccs::geometry
