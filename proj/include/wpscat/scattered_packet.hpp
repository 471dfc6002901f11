#pragma once

// Scattered packet generated by the sharp-ball incident packet: the exact
// superposition over k, its linearized closed form, the geometry of its
// shell-shaped support, the (absent) incident/scattered interference, and the
// intrapacket cross section.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>

#include "wpscat/numerics.hpp"
#include "wpscat/packets.hpp"
#include "wpscat/stationary.hpp"

namespace wpscat {

/// Packet, amplitude and potential range; requires R_I >= 10 R_v.
class ScatterScenario {
 public:
  static constexpr double kMinSeparation = 10.0;

  ScatterScenario(PacketSpec packet, AmplitudeModel amplitude, double potential_range)
      : packet_(std::move(packet)), amplitude_(std::move(amplitude)), potential_range_(potential_range) {
    if (!(potential_range > 0.0)) throw std::invalid_argument("potential range must be positive");
    if (packet_.radius() < kMinSeparation * potential_range)
      throw std::invalid_argument("packet radius must be at least 10x the potential range");
  }

  const PacketSpec& packet() const { return packet_; }
  const AmplitudeModel& amplitude() const { return amplitude_; }
  double potential_range() const { return potential_range_; }

 private:
  PacketSpec packet_;
  AmplitudeModel amplitude_;
  double potential_range_;
};

class DetectorOutsideSupport : public DomainError {
 public:
  DetectorOutsideSupport() : DomainError("detector outside scattered support") {}
};

/// Which inequality describes the scattered support.
enum class ShellModel {
  layer,      ///< |r - vt| <= R_I, valid for r >> R_I
  exact,      ///< |a - u (r - vt)| <= R_I, i.e. |r - vt + R_I| <= R_I for a = -R_I u
  automatic,  ///< layer for r >= 10 R_I, exact otherwise
};

/// Interval (0, 2 R_I / v) during which the packet overlaps the target.
inline std::pair<double, double> interaction_window(const ScatterScenario& s) {
  return {0.0, 2.0 * s.packet().radius() / s.packet().speed()};
}

namespace detail {

// Range of s = r - vt for which |a - u s| <= R, if any.
inline std::optional<std::pair<double, double>> shell_offsets(const PacketSpec& packet) {
  const Vec3 u = packet.direction();
  const double a_par = dot(packet.center(), u);
  const Vec3 a_perp = packet.center() - a_par * u;
  const double disc = packet.radius() * packet.radius() - dot(a_perp, a_perp);
  if (disc < 0.0) return std::nullopt;
  const double half = std::sqrt(disc);
  return std::pair{a_par - half, a_par + half};
}

inline ShellModel resolve(ShellModel model, double r, double radius) {
  if (model != ShellModel::automatic) return model;
  return r >= 10.0 * radius ? ShellModel::layer : ShellModel::exact;
}

}  // namespace detail

/// Inner and outer radius of the support layer at time t.
inline std::pair<double, double> shell_radii(const ScatterScenario& s, double t, ShellModel model = ShellModel::exact) {
  const double vt = s.packet().speed() * t;
  const double radius = s.packet().radius();
  if (model == ShellModel::layer) return {vt - radius, vt + radius};
  const auto offsets = detail::shell_offsets(s.packet());
  if (!offsets) return {0.0, 0.0};
  return {vt + offsets->first, vt + offsets->second};
}

inline bool shell_support(const ScatterScenario& s, double r, double t, ShellModel model = ShellModel::automatic) {
  if (!(r > 0.0)) throw DomainError("shell_support: r must be positive");
  const PacketSpec& packet = s.packet();
  const double offset = r - packet.speed() * t;
  if (detail::resolve(model, r, packet.radius()) == ShellModel::layer) return std::abs(offset) <= packet.radius();
  return ball_indicator(packet.center() - offset * packet.direction(), packet.radius()) > 0.0;
}

/// Time at which the centre of the scattered layer passes radius r.
inline double detector_time(const ScatterScenario& s, double r) {
  const PacketSpec& packet = s.packet();
  return (r - dot(packet.center(), packet.direction())) / packet.speed();
}

/// Default forward-cone exclusion: outside the cylinder swept by the incident ball.
inline double default_theta_min(const ScatterScenario& s, double r) {
  return std::asin(std::min(1.0, 2.0 * s.packet().radius() / r));
}

/// Linearized scattered packet: A(theta_p)/r exp(i(pr - E_p t)) f(a - u (r - vt)).
inline complex scattered_approx(const ScatterScenario& s, const Vec3& x, double t) {
  const double r = norm(x);
  if (!(r > 0.0)) throw DomainError("scattered_approx: r must be positive");
  const PacketSpec& packet = s.packet();
  const Vec3 b = packet.center() - (r - packet.speed() * t) * packet.direction();
  if (ball_indicator(b, packet.radius()) == 0.0) return {0.0, 0.0};
  const double p = packet.momentum_magnitude();
  const complex amp = amplitude_eval(s.amplitude(), p, angle_between(packet.momentum(), x));
  return amp * std::polar(1.0 / r, p * r - packet.energy() * t);
}

inline ComplexField scattered_field(const ScatterScenario& s) {
  ComplexField field;
  field.evaluate = [s](const Vec3& x, double t) { return scattered_approx(s, x, t); };
  field.in_support = [s](const Vec3& x, double t, double /*eps*/) {
    const double r = norm(x);
    return r > 0.0 && shell_support(s, r, t, ShellModel::exact);
  };
  return field;
}

struct ExactOptions {
  /// Momentum integration restricted to |k - p| <= cutoff_factor / R_I.
  double cutoff_factor{40.0};
  /// Integrate d/dr of the field instead of the field itself.
  bool radial_derivative{false};
};

/// Scattered packet by direct quadrature of the k-superposition of outgoing
/// spherical waves, int d^3k e^{-iE_k t} I~(k) A(theta_k) e^{i|k|r}/r.
///
/// Coordinates: q = |k - p|, kappa = |k|, and the azimuth beta of k - p about
/// the beam axis; d^3k = (q kappa / p) dq dkappa dbeta.
inline complex scattered_exact(const ScatterScenario& s, const Vec3& x, double t, const Tolerance& tol = {},
                               const ExactOptions& options = {}) {
  const double r = norm(x);
  if (!(r > s.potential_range())) throw DomainError("scattered_exact: requires r > potential range");
  if (is_identically_zero(s.amplitude())) return {0.0, 0.0};

  const PacketSpec& packet = s.packet();
  const double p = packet.momentum_magnitude();
  const double mass = packet.mass();
  const double radius = packet.radius();
  const Frame frame = Frame::along(packet.direction());
  const Vec3& a = packet.center();
  const double a_par = dot(a, frame.e3);
  const Vec3 a_perp = a - a_par * frame.e3;
  const double cutoff = options.cutoff_factor / radius;

  // With an isotropic amplitude and the centre on the beam axis the azimuthal
  // integral is 2 pi A0 times the axial phase.
  const bool azimuth_trivial = is_isotropic(s.amplitude()) && norm(a_perp) <= 1e-14 * (1.0 + std::abs(a_par));

  auto azimuthal = [&](double q, double kappa, double c) -> complex {
    const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
    if (azimuth_trivial) return 2.0 * std::numbers::pi * std::get<IsotropicAmplitude>(s.amplitude()).a0;
    auto integrand = [&](double beta) {
      const Vec3 n = c * frame.e3 + sn * (std::cos(beta) * frame.e1 + std::sin(beta) * frame.e2);
      const Vec3 k = packet.momentum() + q * n;
      const complex amp = amplitude_eval(s.amplitude(), kappa, angle_between(k, x));
      return amp * std::polar(1.0, -q * dot(n, a_perp));
    };
    return integrate_adaptive(integrand, 0.0, 2.0 * std::numbers::pi, tol);
  };

  // Total kappa-dependent phase: kappa r - kappa^2 t / 2m - q c a_par, where
  // q c = (kappa^2 - p^2 - q^2) / 2p.
  const double quad_coeff = t / (2.0 * mass) + a_par / (2.0 * p);
  auto phase = [&](double kappa) { return kappa * r - quad_coeff * kappa * kappa; };

  auto over_kappa = [&](double q) -> complex {
    if (q <= 0.0) return {0.0, 0.0};
    const double lo = std::abs(p - q);
    const double hi = p + q;
    double variation = std::abs(phase(hi) - phase(lo));
    if (quad_coeff != 0.0) {
      const double vertex = r / (2.0 * quad_coeff);
      if (vertex > lo && vertex < hi)
        variation = std::max({variation, std::abs(phase(vertex) - phase(lo)), std::abs(phase(vertex) - phase(hi))});
    }
    const int panels = 1 + static_cast<int>(variation / std::numbers::pi);
    const double weight = ball_transform(q, radius);
    auto integrand = [&](double kappa) -> complex {
      const double c = std::clamp((kappa * kappa - p * p - q * q) / (2.0 * p * q), -1.0, 1.0);
      complex value = (q * kappa / p) * weight * azimuthal(q, kappa, c) *
                      std::polar(1.0 / r, phase(kappa) + (p * p + q * q) * a_par / (2.0 * p));
      if (options.radial_derivative) value *= complex(-1.0 / r, kappa);
      return value;
    };
    return integrate_adaptive(integrand, lo, hi, tol, panels);
  };

  const int q_panels = 1 + static_cast<int>(cutoff * radius / std::numbers::pi);
  const complex integral = integrate_adaptive(over_kappa, 0.0, cutoff, tol, q_panels);
  return integral;
}

/// Field model used for intrapacket fluxes.
enum class PacketFieldModel {
  linearized,  ///< closed-form linearized packet, amplitude frozen at theta_p
  smeared,     ///< linearized dispersion, amplitude averaged over the packet's momentum spread
  exact,       ///< full k-superposition
};

namespace detail {

// Amplitude averaged over the momentum content of the packet with linearized
// dispersion, written relative to the frozen amplitude A(theta_p):
//   G = A_p f(b) + int_{|k'|<Q} d^3k' f~(k') e^{ik'.b} [A(p - k') - A_p]
// and its derivative along r (b depends on r through -u r). The constant part
// is handled in closed form; spherical truncation of f~ alone does not
// converge at the ball centre.
struct SmearedAmplitude {
  complex value;
  complex radial_derivative;
};

inline SmearedAmplitude smeared_amplitude(const ScatterScenario& s, const Vec3& x, double t, const Tolerance& tol,
                                          double cutoff_factor) {
  const PacketSpec& packet = s.packet();
  const double p = packet.momentum_magnitude();
  const double radius = packet.radius();
  const double r = norm(x);
  const Vec3 u = packet.direction();
  const Vec3 b = packet.center() - (r - packet.speed() * t) * u;
  const complex frozen = amplitude_eval(s.amplitude(), p, angle_between(packet.momentum(), x));
  const complex base = frozen * ball_indicator(b, radius);
  if (is_isotropic(s.amplitude())) return {base, {0.0, 0.0}};

  const Frame frame = Frame::along(u);
  const double cutoff = cutoff_factor / radius;
  auto shell = [&](double q, bool derivative) -> complex {
    const double weight = ball_transform(q, radius);
    auto over_cos = [&](double c) -> complex {
      const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
      auto over_beta = [&](double beta) -> complex {
        const Vec3 n = c * frame.e3 + sn * (std::cos(beta) * frame.e1 + std::sin(beta) * frame.e2);
        const Vec3 k = packet.momentum() - q * n;
        const complex delta = amplitude_eval(s.amplitude(), norm(k), angle_between(k, x)) - frozen;
        complex v = delta * std::polar(1.0, q * dot(n, b));
        if (derivative) v *= complex(0.0, -q * c);
        return v;
      };
      return integrate_adaptive(over_beta, 0.0, 2.0 * std::numbers::pi, tol);
    };
    return q * q * weight * integrate_adaptive(over_cos, -1.0, 1.0, tol);
  };
  const int panels = 1 + static_cast<int>(cutoff_factor / std::numbers::pi);
  const complex correction = integrate_adaptive([&](double q) { return shell(q, false); }, 0.0, cutoff, tol, panels);
  const complex derivative = integrate_adaptive([&](double q) { return shell(q, true); }, 0.0, cutoff, tol, panels);
  return {base + correction, derivative};
}

}  // namespace detail

struct PacketDcsOptions {
  PacketFieldModel model{PacketFieldModel::linearized};
  Tolerance tolerance{1e-10, 1e-8, 4000};
  double cutoff_factor{40.0};
};

/// Intrapacket differential cross section j_r r^2 / F at a detector point
/// (r, theta, phi) and time t, where both fluxes are evaluated inside the
/// moving packets.
inline double packet_dcs(const ScatterScenario& s, double theta, double phi, double r, double t,
                         const PacketDcsOptions& options = {}) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) throw DomainError("packet_dcs: theta outside [0, pi]");
  if (!(r > 0.0)) throw DomainError("packet_dcs: r must be positive");
  if (!shell_support(s, r, t, ShellModel::exact)) throw DetectorOutsideSupport();

  const PacketSpec& packet = s.packet();
  const double p = packet.momentum_magnitude();
  const double mass = packet.mass();
  const Frame frame = Frame::along(packet.direction());
  const Vec3 x = frame.spherical(r, theta, phi);
  const Vec3 radial = x / r;

  switch (options.model) {
    case PacketFieldModel::linearized: {
      const double h = default_fd_step(p);
      auto scattered = [&](const Vec3& y) { return scattered_approx(s, y, t); };
      auto incident = [&](const Vec3& y) { return free_packet(packet, y, t); };
      const FluxVector j = flux_density(scattered(x), gradient_central(scattered, x, h), mass);
      const Vec3 inside = packet.center() + packet.velocity() * t;
      const FluxVector f = flux_density(incident(inside), gradient_central(incident, inside, h), mass);
      return dot(j.j, radial) * r * r / dot(f.j, packet.direction());
    }
    case PacketFieldModel::smeared: {
      const auto g = detail::smeared_amplitude(s, x, t, options.tolerance, options.cutoff_factor);
      const double jr_r2 = (p * std::norm(g.value) + (std::conj(g.value) * g.radial_derivative).imag()) / mass;
      return jr_r2 / incident_flux_density(packet.speed());
    }
    case PacketFieldModel::exact: {
      ExactOptions exact{options.cutoff_factor, false};
      const complex field = scattered_exact(s, x, t, options.tolerance, exact);
      exact.radial_derivative = true;
      const complex slope = scattered_exact(s, x, t, options.tolerance, exact);
      const double j_r = (std::conj(field) * slope).imag() / mass;
      return j_r * r * r / incident_flux_density(packet.speed());
    }
  }
  throw std::logic_error("packet_dcs: unknown field model");
}

/// Interference part of the flux, (i/2m)(grad S^* I - c.c.) + (i/2m)(grad I^* S - c.c.),
/// with the free incident packet and the linearized scattered packet.
inline Vec3 interference_flux(const ScatterScenario& s, const Vec3& x, double t, double h) {
  if (!(norm(x) > 0.0)) throw DomainError("interference_flux: r must be positive");
  const PacketSpec& packet = s.packet();
  auto incident = [&](const Vec3& y) { return free_packet(packet, y, t); };
  auto scattered = [&](const Vec3& y) { return norm(y) > 0.0 ? scattered_approx(s, y, t) : complex{}; };
  const complex in = incident(x);
  const complex sc = scattered(x);
  const CVec3 grad_in = gradient_central(incident, x, h);
  const CVec3 grad_sc = gradient_central(scattered, x, h);
  return (cross_flux(grad_sc, in, packet.mass()) + cross_flux(grad_in, sc, packet.mass())).j;
}

/// Normalized overlap int |I| |S| d^3x / (sqrt(V_I) ||S||) over theta > theta_min,
/// with ||S|| taken over the same angular region. Identical co-located fields give 1.
///
/// Radial limits follow the ray's intersection with the incident ball and the
/// scattered layer, so disjoint supports give exactly zero.
inline double overlap_measure(const ScatterScenario& s, double t, double theta_min, const Tolerance& tol = {1e-10, 1e-7, 4000}) {
  if (!(theta_min > 0.0 && theta_min < std::numbers::pi)) throw DomainError("overlap_measure: theta_min in (0, pi)");
  if (is_identically_zero(s.amplitude())) return 0.0;

  const PacketSpec& packet = s.packet();
  const Frame frame = Frame::along(packet.direction());
  const auto offsets = detail::shell_offsets(packet);
  if (!offsets) return 0.0;
  const double vt = packet.speed() * t;
  const double shell_lo = std::max(0.0, vt + offsets->first);
  const double shell_hi = vt + offsets->second;
  if (!(shell_hi > shell_lo)) return 0.0;

  const Vec3 ball = packet.center() + packet.velocity() * t;
  const double ball_dist = norm(ball);
  const double radius = packet.radius();

  // Angular extent of the incident ball seen from the origin.
  double theta_lo = theta_min, theta_hi = std::numbers::pi;
  if (ball_dist > radius) {
    const double half_angle = std::asin(radius / ball_dist);
    const double theta_c = angle_between(frame.e3, ball);
    theta_lo = std::max(theta_lo, theta_c - half_angle);
    theta_hi = std::min(theta_hi, theta_c + half_angle);
  }

  auto modulus_product = [&](double r, const Vec3& n) {
    const Vec3 y = r * n;
    return std::abs(free_packet(packet, y, t)) * std::abs(scattered_approx(s, y, t)) * r * r;
  };

  double numerator = 0.0;
  if (theta_hi > theta_lo) {
    auto over_phi = [&](double theta) {
      auto ray = [&](double phi) {
        const Vec3 n = frame.spherical(1.0, theta, phi);
        const double along = dot(n, ball);
        const double disc = along * along - dot(ball, ball) + radius * radius;
        if (disc <= 0.0) return 0.0;
        const double root = std::sqrt(disc);
        const double lo = std::max({shell_lo, along - root, 0.0});
        const double hi = std::min(shell_hi, along + root);
        if (!(hi > lo)) return 0.0;
        return integrate_adaptive_real([&](double r) { return modulus_product(r, n); }, lo, hi, tol);
      };
      return std::sin(theta) * integrate_adaptive_real(ray, 0.0, 2.0 * std::numbers::pi, tol);
    };
    numerator = integrate_adaptive_real(over_phi, theta_lo, theta_hi, tol);
  }
  if (numerator == 0.0) return 0.0;

  auto shell_norm_phi = [&](double theta) {
    auto ray = [&](double phi) {
      const Vec3 n = frame.spherical(1.0, theta, phi);
      return integrate_adaptive_real(
          [&](double r) { return std::norm(scattered_approx(s, r * n, t)) * r * r; }, shell_lo, shell_hi, tol);
    };
    return std::sin(theta) * integrate_adaptive_real(ray, 0.0, 2.0 * std::numbers::pi, tol);
  };
  const double shell_norm2 = integrate_adaptive_real(shell_norm_phi, theta_min, std::numbers::pi, tol);
  if (!(shell_norm2 > 0.0)) return 0.0;
  return numerator / (std::sqrt(packet.volume()) * std::sqrt(shell_norm2));
}

}  // namespace wpscat
