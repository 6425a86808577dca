#include "rbd/math3d.hpp"

#include <string>

#include "rbd/error.hpp"

namespace rbd {

bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

bool is_finite(const Quaternion& q) {
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
          a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
          a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
    }
  }
  return out;
}

Mat3 transpose(const Mat3& a) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out(r, c) = a(c, r);
  }
  return out;
}

double trace(const Mat3& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

double determinant(const Mat3& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

Mat3 inverse(const Mat3& a) {
  const double det = determinant(a);
  if (!(std::abs(det) > 1e-300)) {
    throw Error(Errc::invalid_argument, "singular matrix");
  }
  const double inv = 1.0 / det;
  Mat3 out;
  out(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) * inv;
  out(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) * inv;
  out(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) * inv;
  out(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) * inv;
  out(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) * inv;
  out(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) * inv;
  out(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) * inv;
  out(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) * inv;
  out(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) * inv;
  return out;
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double len = norm(axis);
  if (!(len > 0.0)) throw Error(Errc::invalid_argument, "zero rotation axis");
  const Vec3 u = axis / len;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), u.x * s, u.y * s, u.z * s};
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion quat_derivative(const Quaternion& q, const Vec3& omega) {
  return quat_mul(q, Quaternion::pure(omega)) * 0.5;
}

Quaternion quat_normalize(const Quaternion& q) {
  const double n = norm(q);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(Errc::degenerate_quaternion, "degenerate quaternion");
  }
  return q * (1.0 / n);
}

namespace {

void require_unit(const Quaternion& q) {
  const double n = norm(q);
  if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
    throw Error(Errc::non_unit_quaternion, "quaternion norm " + std::to_string(n) + " is not unit");
  }
}

}  // namespace

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
  require_unit(q);
  // v + 2w(u×v) + 2u×(u×v), the expanded form of q (0,v) q*.
  const Vec3 u = q.vec();
  const Vec3 t = cross(u, v) * 2.0;
  return v + t * q.w + cross(u, t);
}

Mat3 rotation_matrix(const Quaternion& q) {
  require_unit(q);
  const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  return Mat3{{ww + xx - yy - zz, 2 * (xy - wz), 2 * (xz + wy),
               2 * (xy + wz), ww - xx + yy - zz, 2 * (yz - wx),
               2 * (xz - wy), 2 * (yz + wx), ww - xx - yy + zz}};
}

namespace {

Mat3 congruence_diag(const Mat3& r, const Vec3& d) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double v = r(i, 0) * d.x * r(j, 0) + r(i, 1) * d.y * r(j, 1) + r(i, 2) * d.z * r(j, 2);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

void require_positive(const Vec3& d) {
  if (!(d.x > 0.0 && d.y > 0.0 && d.z > 0.0) || !is_finite(d)) {
    throw Error(Errc::invalid_argument, "inertia diagonal must be strictly positive");
  }
}

}  // namespace

Mat3 inertia_world(const Quaternion& q, const Vec3& inertia_body_diag) {
  require_positive(inertia_body_diag);
  return congruence_diag(rotation_matrix(q), inertia_body_diag);
}

Mat3 inverse_inertia_world(const Quaternion& q, const Vec3& inertia_body_diag) {
  require_positive(inertia_body_diag);
  const Vec3 inv{1.0 / inertia_body_diag.x, 1.0 / inertia_body_diag.y, 1.0 / inertia_body_diag.z};
  return congruence_diag(rotation_matrix(q), inv);
}

}  // namespace rbd
