#include "ccs/geometry/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ccs/errors.hpp"

namespace ccs::geometry {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;
}  // namespace

Quaternion quat_normalize(const Quaternion& q) {
  const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  if (!(n > 1e-12)) throw NumericError("quat_normalize: quaternion norm is (near) zero");
  const double s = q.w < 0.0 ? -1.0 / n : 1.0 / n;
  return {q.w * s, q.x * s, q.y * s, q.z * s};
}

Quaternion quat_conjugate(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion quat_from_axis_angle(const Vec3& axis, double radians) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(n > 1e-12)) throw NumericError("quat_from_axis_angle: zero axis");
  const double s = std::sin(radians / 2) / n;
  return {std::cos(radians / 2), axis[0] * s, axis[1] * s, axis[2] * s};
}

Quaternion random_rotation(nn::Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double t1 = 2 * std::numbers::pi * u2, t2 = 2 * std::numbers::pi * u3;
  return quat_normalize({b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2)});
}

Mat3 quat_to_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

Vec3 apply(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Vec3 rotate(const Quaternion& q, const Vec3& v) { return geometry::apply(quat_to_matrix(q), v); }

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[3 * i + j] += a[3 * i + k] * b[3 * k + j];
  return c;
}

Mat3 transpose(const Mat3& m) { return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}; }

double wrap_degrees(double degrees) {
  double r = std::fmod(degrees, 360.0);
  if (r > 180.0) r -= 360.0;
  if (r <= -180.0) r += 360.0;
  return r;
}

Vec3 quat_to_euler_deg(const Quaternion& q) {
  const Mat3 r = quat_to_matrix(quat_normalize(q));
  const double sin_b = std::clamp(r[2], -1.0, 1.0);
  const double b = std::asin(sin_b);
  double a = 0.0, c = 0.0;
  if (std::abs(std::abs(b * kRadToDeg) - 90.0) < 1e-6) {
    // Gimbal lock: only a ± c is observable. Pin a = 0; then R = Ry(b)·Rz(c)
    // whose middle row is (sin c, cos c, 0).
    c = std::atan2(r[3], r[4]);
  } else {
    a = std::atan2(-r[5], r[8]);
    c = std::atan2(-r[1], r[0]);
  }
  return {wrap_degrees(a * kRadToDeg), wrap_degrees(b * kRadToDeg), wrap_degrees(c * kRadToDeg)};
}

Mat3 euler_deg_to_matrix(const Vec3& degrees) {
  const double a = degrees[0] * kDegToRad, b = degrees[1] * kDegToRad, c = degrees[2] * kDegToRad;
  const Mat3 rx{1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a)};
  const Mat3 ry{std::cos(b), 0, std::sin(b), 0, 1, 0, -std::sin(b), 0, std::cos(b)};
  const Mat3 rz{std::cos(c), -std::sin(c), 0, std::sin(c), std::cos(c), 0, 0, 0, 1};
  return matmul(matmul(rx, ry), rz);
}

double geodesic_angle_deg(const Quaternion& a, const Quaternion& b) {
  const auto d = quat_multiply(quat_conjugate(quat_normalize(a)), quat_normalize(b));
  const double v = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  return 2.0 * std::atan2(v, std::abs(d.w)) * kRadToDeg;
}

}  // namespace ccs::geometry
