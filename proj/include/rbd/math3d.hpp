#pragma once

// Small fixed-size vector, matrix and quaternion algebra in double precision.
// Quaternions are scalar-first (w, x, y, z) and multiply with the Hamilton
// convention.

#include <array>
#include <cmath>

namespace rbd {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

bool is_finite(const Vec3& v);

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static constexpr Mat3 diagonal(const Vec3& d) { return Mat3{{d.x, 0, 0, 0, d.y, 0, 0, 0, d.z}}; }

  constexpr double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
  constexpr double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

  constexpr bool operator==(const Mat3&) const = default;
};

Vec3 operator*(const Mat3& a, const Vec3& v);
Mat3 operator*(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& a);
double trace(const Mat3& a);
double determinant(const Mat3& a);
/// Throws Errc::invalid_argument when |det| is below 1e-300.
Mat3 inverse(const Mat3& a);

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
  /// Pure quaternion (0, v).
  static constexpr Quaternion pure(const Vec3& v) { return {0.0, v.x, v.y, v.z}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);

  constexpr Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  constexpr Quaternion operator-(const Quaternion& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
  constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }
  constexpr Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
  constexpr Vec3 vec() const { return {x, y, z}; }
  constexpr Quaternion conjugate() const { return {w, -x, -y, -z}; }
  constexpr bool operator==(const Quaternion&) const = default;
};

constexpr double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Quaternion& q) { return std::sqrt(dot(q, q)); }

bool is_finite(const Quaternion& q);

/// Unit-norm tolerance used wherever a rotation is required.
inline constexpr double kUnitTolerance = 1e-9;

/// Hamilton product a ⊗ b.
Quaternion quat_mul(const Quaternion& a, const Quaternion& b);

/// ½ q ⊗ (0, ω): the orientation rate for body-frame angular velocity ω.
Quaternion quat_derivative(const Quaternion& q, const Vec3& omega);

/// Throws Errc::degenerate_quaternion for a zero (or non-finite) norm.
Quaternion quat_normalize(const Quaternion& q);

/// Rotates v by unit q. Throws Errc::non_unit_quaternion if |q| is off by more
/// than kUnitTolerance.
Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

/// Rotation matrix of unit q (same tolerance rule as quat_rotate).
Mat3 rotation_matrix(const Quaternion& q);

/// R diag(I_body) Rᵀ. Throws Errc::invalid_argument for a nonpositive diagonal.
Mat3 inertia_world(const Quaternion& q, const Vec3& inertia_body_diag);

/// Inverse of inertia_world, formed as R diag(1/I_body) Rᵀ.
Mat3 inverse_inertia_world(const Quaternion& q, const Vec3& inertia_body_diag);

}  // namespace rbd
