#pragma once

// Sharp-ball incident packet: construction, Fourier transform and spread-free
// free evolution. Natural units, hbar = 1.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "wpscat/vec3.hpp"

namespace wpscat {

/// Incident packet exp(i p.x) f(x - a), with f the indicator of a ball of
/// radius R. Immutable once constructed.
class PacketSpec {
 public:
  /// Center defaults to -R u, so the packet front touches the target at t = 0.
  PacketSpec(double radius, Vec3 momentum, double mass, std::optional<Vec3> center = std::nullopt)
      : radius_(radius), momentum_(momentum), mass_(mass) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be positive");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be positive");
    if (!(norm(momentum) > 0.0)) throw std::invalid_argument("momentum must be non-zero");
    center_ = center.value_or(-radius * direction());
  }

  double radius() const { return radius_; }
  const Vec3& momentum() const { return momentum_; }
  const Vec3& center() const { return center_; }
  double mass() const { return mass_; }

  double momentum_magnitude() const { return norm(momentum_); }
  double speed() const { return momentum_magnitude() / mass_; }
  Vec3 direction() const { return momentum_ / momentum_magnitude(); }
  Vec3 velocity() const { return momentum_ / mass_; }
  double volume() const { return 4.0 / 3.0 * std::numbers::pi * radius_ * radius_ * radius_; }
  double energy() const { return dot(momentum_, momentum_) / (2.0 * mass_); }

 private:
  double radius_;
  Vec3 momentum_;
  double mass_;
  Vec3 center_;
};

/// Practical support threshold relative to the peak modulus of a field.
inline constexpr double kSupportThreshold = 1e-6;

/// A complex scalar field of position and time together with a predicate that
/// is true wherever the modulus may exceed eps.
struct ComplexField {
  std::function<complex(const Vec3&, double)> evaluate;
  std::function<bool(const Vec3&, double, double)> in_support;
  double peak_modulus{1.0};

  complex operator()(const Vec3& x, double t) const { return evaluate(x, t); }

  bool support_test(const Vec3& x, double t) const { return in_support(x, t, kSupportThreshold * peak_modulus); }
};

/// 1 on the closed ball |x| <= R, 0 outside.
inline double ball_indicator(const Vec3& x, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball_indicator: radius must be positive");
  return dot(x, x) <= radius * radius ? 1.0 : 0.0;
}

inline complex packet_value(const PacketSpec& spec, const Vec3& x) {
  if (ball_indicator(x - spec.center(), spec.radius()) == 0.0) return {0.0, 0.0};
  return std::polar(1.0, dot(spec.momentum(), x));
}

/// Fourier transform of the unit ball indicator, (2 pi)^-3 int d^3x e^{-iq.x} f(x),
/// as a function of |q|.
inline double ball_transform(double q, double radius) {
  constexpr double prefactor = 4.0 * std::numbers::pi / (8.0 * std::numbers::pi * std::numbers::pi * std::numbers::pi);
  const double x = std::abs(q) * radius;
  const double r3 = radius * radius * radius;
  if (x < 0.05) {
    // (sin x - x cos x) / x^3 = 1/3 - x^2/30 + x^4/840 - x^6/45360 + ...
    const double x2 = x * x;
    return prefactor * r3 * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45360.0);
  }
  return prefactor * r3 * (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

/// Fourier coefficient of the incident packet at wave vector k.
///
/// Exact transform of packet_value: exp(i (p - k).a) ftilde(p - k), so that
/// int d^3k e^{ik.x} packet_fourier(k) reproduces packet_value(x).
inline complex packet_fourier(const PacketSpec& spec, const Vec3& k) {
  const Vec3 q = spec.momentum() - k;
  return ball_transform(norm(q), spec.radius()) * std::polar(1.0, dot(q, spec.center()));
}

/// Free evolution neglecting spreading: the packet shifted by v t.
inline complex free_packet(const PacketSpec& spec, const Vec3& x, double t) {
  return packet_value(spec, x - spec.velocity() * t);
}

inline double packet_norm(const PacketSpec& spec) { return spec.volume(); }

inline ComplexField incident_field(const PacketSpec& spec) {
  ComplexField field;
  field.evaluate = [spec](const Vec3& x, double t) { return free_packet(spec, x, t); };
  // Sharp edge: the modulus is exactly 0 or 1, so the support is the moving ball.
  field.in_support = [spec](const Vec3& x, double t, double /*eps*/) {
    return ball_indicator(x - spec.center() - spec.velocity() * t, spec.radius()) > 0.0;
  };
  field.peak_modulus = 1.0;
  return field;
}

}  // namespace wpscat
