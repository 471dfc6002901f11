#pragma once

// Stationary scattering state e^{ik.x} + A(theta, phi) e^{ikr}/r, its
// probability flux, the four-term flux decomposition and the cross section
// built from the flux ratio.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "wpscat/numerics.hpp"
#include "wpscat/vec3.hpp"

namespace wpscat {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct IsotropicAmplitude {
  complex a0{1.0, 0.0};
};

/// First Born amplitude of V(r) = g e^{-kappa r} / r.
struct BornYukawaAmplitude {
  double coupling{1.0};
  double screening{1.0};
  double mass{1.0};
};

/// Amplitude tabulated on a strictly increasing theta grid in [0, pi],
/// linearly interpolated.
class TabulatedAmplitude {
 public:
  TabulatedAmplitude(std::vector<double> theta, std::vector<complex> value)
      : theta_(std::move(theta)), value_(std::move(value)) {
    if (theta_.size() < 2 || theta_.size() != value_.size())
      throw std::invalid_argument("tabulated amplitude needs at least two (theta, value) rows");
    for (std::size_t i = 0; i < theta_.size(); ++i) {
      if (theta_[i] < 0.0 || theta_[i] > std::numbers::pi)
        throw std::invalid_argument("tabulated amplitude: theta outside [0, pi]");
      if (i > 0 && !(theta_[i] > theta_[i - 1]))
        throw std::invalid_argument("tabulated amplitude: theta grid must be strictly increasing");
    }
  }

  complex operator()(double theta) const {
    if (theta < theta_.front() || theta > theta_.back())
      throw DomainError("tabulated amplitude: theta outside the tabulated range");
    const auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
    if (it == theta_.end()) return value_.back();
    const auto hi = static_cast<std::size_t>(it - theta_.begin());
    const std::size_t lo = hi - 1;
    const double w = (theta - theta_[lo]) / (theta_[hi] - theta_[lo]);
    return (1.0 - w) * value_[lo] + w * value_[hi];
  }

  const std::vector<double>& theta() const { return theta_; }
  const std::vector<complex>& values() const { return value_; }

 private:
  std::vector<double> theta_;
  std::vector<complex> value_;
};

using AmplitudeModel = std::variant<IsotropicAmplitude, BornYukawaAmplitude, TabulatedAmplitude>;

inline bool is_isotropic(const AmplitudeModel& model) {
  return std::holds_alternative<IsotropicAmplitude>(model);
}

inline bool is_identically_zero(const AmplitudeModel& model) {
  return std::visit(
      [](const auto& m) -> bool {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IsotropicAmplitude>) {
          return m.a0 == complex{};
        } else if constexpr (std::is_same_v<T, BornYukawaAmplitude>) {
          return m.coupling == 0.0;
        } else {
          return std::all_of(m.values().begin(), m.values().end(), [](complex v) { return v == complex{}; });
        }
      },
      model);
}

/// A(theta, phi) at wave number k. All built-in models are independent of phi.
inline complex amplitude_eval(const AmplitudeModel& model, double k, double theta, double /*phi*/ = 0.0) {
  // Tolerate rounding from angle computations at the end points.
  constexpr double slack = 1e-12;
  if (!(theta >= -slack && theta <= std::numbers::pi + slack))
    throw DomainError("amplitude_eval: theta outside [0, pi]");
  theta = std::clamp(theta, 0.0, std::numbers::pi);
  return std::visit(
      [&](const auto& m) -> complex {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IsotropicAmplitude>) {
          return m.a0;
        } else if constexpr (std::is_same_v<T, BornYukawaAmplitude>) {
          const double q = 2.0 * k * std::sin(0.5 * theta);
          return -2.0 * m.mass * m.coupling / (m.screening * m.screening + q * q);
        } else {
          return m(theta);
        }
      },
      model);
}

/// Reads a two-column amplitude table: theta (radians), then the complex value
/// as re,im. A non-numeric first line is treated as a header; '#' starts a comment.
inline TabulatedAmplitude load_tabulated_amplitude(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open amplitude table '" + path + "'");
  std::vector<double> theta;
  std::vector<complex> value;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double th = 0, re = 0, im = 0;
    if (!(fields >> th >> re >> im)) {
      if (theta.empty() && line_no == 1) continue;
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected theta,re,im");
    }
    theta.push_back(th);
    value.emplace_back(re, im);
  }
  return {std::move(theta), std::move(value)};
}

struct StationaryState {
  Vec3 k;
  double mass{1.0};
  AmplitudeModel amplitude{IsotropicAmplitude{}};

  double wave_number() const { return norm(k); }
  double energy() const { return dot(k, k) / (2.0 * mass); }
  Vec3 velocity() const { return k / mass; }
};

struct FluxVector {
  Vec3 j;
};

inline FluxVector operator+(const FluxVector& a, const FluxVector& b) { return {a.j + b.j}; }

/// Default finite-difference step for gradients of waves with wave number k.
inline double default_fd_step(double k) { return 1e-4 / k; }

inline complex incident_wave(const StationaryState& state, const Vec3& x) {
  return std::polar(1.0, dot(state.k, x));
}

inline complex scattered_wave(const StationaryState& state, const Vec3& x) {
  const double r = norm(x);
  if (!(r > 0.0)) throw DomainError("scattered wave is singular at r = 0");
  const double k = state.wave_number();
  const double theta = angle_between(state.k, x);
  return amplitude_eval(state.amplitude, k, theta) * std::polar(1.0 / r, k * r);
}

inline complex stationary_wave(const StationaryState& state, const Vec3& x) {
  return incident_wave(state, x) + scattered_wave(state, x);
}

/// j = (i/2m) (grad psi^* psi - psi^* grad psi).
inline FluxVector flux_density(complex psi, const CVec3& grad_psi, double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("flux_density: mass must be positive");
  const complex i_over_2m(0.0, 1.0 / (2.0 * mass));
  Vec3 j;
  for (int c = 0; c < 3; ++c) {
    const complex g = grad_psi[static_cast<std::size_t>(c)];
    j[c] = (i_over_2m * (std::conj(g) * psi - std::conj(psi) * g)).real();
  }
  return {j};
}

/// One term (i/2m)(grad a^* b - c.c.) of the flux decomposition.
inline FluxVector cross_flux(const CVec3& grad_a, complex b, double mass) {
  const complex i_over_2m(0.0, 1.0 / (2.0 * mass));
  Vec3 j;
  for (int c = 0; c < 3; ++c) {
    const complex term = std::conj(grad_a[static_cast<std::size_t>(c)]) * b;
    j[c] = (i_over_2m * (term - std::conj(term))).real();
  }
  return {j};
}

/// Incident-incident, scattered-scattered, and the two interference terms
/// (grad S^* I and grad I^* S), in that order.
inline std::array<FluxVector, 4> flux_terms(const StationaryState& state, const Vec3& x, double h) {
  if (!(norm(x) > 0.0)) throw DomainError("flux_terms: r must be positive");
  auto incident = [&](const Vec3& y) { return incident_wave(state, y); };
  auto scattered = [&](const Vec3& y) { return scattered_wave(state, y); };
  const complex in = incident(x);
  const complex sc = scattered(x);
  const CVec3 grad_in = gradient_central(incident, x, h);
  const CVec3 grad_sc = gradient_central(scattered, x, h);
  return {cross_flux(grad_in, in, state.mass), cross_flux(grad_sc, sc, state.mass),
          cross_flux(grad_sc, in, state.mass), cross_flux(grad_in, sc, state.mass)};
}

/// Differential cross section |A|^2, the large-r limit of j_r r^2 / F with F = v.
inline double stationary_dcs(const StationaryState& state, double theta, double phi = 0.0) {
  return std::norm(amplitude_eval(state.amplitude, state.wave_number(), theta, phi));
}

/// Delta sigma = Delta N / F with Delta N = j_r r^2 Delta Omega.
inline double cross_section_from_rate(double j_r, double r, double solid_angle, double incident_flux) {
  if (!(incident_flux > 0.0)) throw DomainError("cross_section_from_rate: incident flux must be positive");
  if (!(r > 0.0)) throw DomainError("cross_section_from_rate: r must be positive");
  if (!(solid_angle > 0.0)) throw DomainError("cross_section_from_rate: solid angle must be positive");
  const double count_rate = j_r * r * r * solid_angle;
  return count_rate / incident_flux;
}

/// Incident flux density F = rho v with one particle per unit volume.
inline double incident_flux_density(double speed, double density = 1.0) { return density * speed; }

}  // namespace wpscat
