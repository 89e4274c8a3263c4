#pragma once

#include <array>

#include "ccs/nn/rng.hpp"

namespace ccs::geometry {

using Vec3 = std::array<double, 3>;
// Row-major 3×3.
using Mat3 = std::array<double, 9>;

// Rotation as (w, x, y, z). Values produced by quat_normalize are unit-norm
// with w >= 0, the representative of {q, -q}.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }
  bool operator==(const Quaternion&) const = default;
};

Quaternion quat_normalize(const Quaternion& q);
Quaternion quat_conjugate(const Quaternion& q);
// Hamilton product; rotating by the result applies b first, then a.
Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);
Quaternion quat_from_axis_angle(const Vec3& axis, double radians);
// Uniformly distributed rotation (Shoemake's subgroup algorithm).
Quaternion random_rotation(nn::Rng& rng);

Mat3 quat_to_matrix(const Quaternion& q);
Vec3 rotate(const Quaternion& q, const Vec3& v);
Vec3 apply(const Mat3& m, const Vec3& v);
Mat3 matmul(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& m);

// Intrinsic X-Y-Z Euler angles in degrees, each in (-180, 180]:
// R = Rx(a)·Ry(b)·Rz(c). Within 1e-6 degrees of b = ±90 the first angle is
// pinned to 0 and the remaining rotation is assigned to c.
Vec3 quat_to_euler_deg(const Quaternion& q);
Mat3 euler_deg_to_matrix(const Vec3& degrees);
// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double degrees);
// Rotation angle of a⁻¹·b in degrees, in [0, 180].
double geodesic_angle_deg(const Quaternion& a, const Quaternion& b);

}  // namespace ccs::geometry
