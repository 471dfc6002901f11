#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace wpscat {

using complex = std::complex<double>;

/// Real 3-vector used for positions, momenta and fluxes.
struct Vec3 {
  double x{0.0}, y{0.0}, z{0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

/// Angle in [0, pi] between two non-zero vectors.
inline double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate near 0 and pi where acos loses digits.
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

/// Orthonormal frame (e1, e2, e3) with e3 along the given direction.
struct Frame {
  Vec3 e1, e2, e3;

  static Frame along(const Vec3& dir) {
    Frame f;
    f.e3 = normalized(dir);
    const Vec3 helper = std::abs(f.e3.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    f.e1 = normalized(cross(helper, f.e3));
    f.e2 = cross(f.e3, f.e1);
    return f;
  }

  /// Position from spherical coordinates (r, theta, phi) in this frame.
  Vec3 spherical(double r, double theta, double phi) const {
    const double st = std::sin(theta);
    return r * (st * std::cos(phi) * e1 + st * std::sin(phi) * e2 + std::cos(theta) * e3);
  }
};

/// Complex 3-vector, e.g. a wave-function gradient.
using CVec3 = std::array<complex, 3>;

}  // namespace wpscat
