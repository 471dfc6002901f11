#pragma once

// Finite-time transition kernels and the rate per unit time.
//
//   delta_T(E)        = sin(ET/2) / (pi E)          weakly -> delta(E)
//   fejer(E, T)       = 4 sin^2(ET/2) / (T E^2)     weakly -> 2 pi delta(E)
//   rate_derivative   = d/dT [4 sin^2(ET/2) / E^2]  = (2/E) sin(ET), weakly -> 2 pi delta(E)
//
// Integrals over the whole energy axis are computed on [-L, L] with the
// oscillatory tails added in closed form through the sine integral.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "wpscat/numerics.hpp"

namespace wpscat {

enum class KernelKind { delta_t, fejer, rate_derivative };

inline std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::delta_t: return "delta_T";
    case KernelKind::fejer: return "fejer";
    case KernelKind::rate_derivative: return "rate_derivative";
  }
  return "?";
}

struct KernelSpec {
  KernelKind kind{KernelKind::fejer};
  double duration{1.0};

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("kernel duration T must be positive");
  }
};

namespace detail {
inline constexpr double kSmallArgument = 1e-8;
}

inline double delta_T_kernel(double energy, double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("delta_T_kernel: T must be positive");
  if (std::abs(energy) * duration < detail::kSmallArgument) return duration / (2.0 * std::numbers::pi);
  return std::sin(0.5 * energy * duration) / (std::numbers::pi * energy);
}

inline double fejer_kernel(double energy, double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("fejer_kernel: T must be positive");
  if (std::abs(energy) * duration < detail::kSmallArgument) return duration;
  const double s = std::sin(0.5 * energy * duration);
  return 4.0 * s * s / (duration * energy * energy);
}

inline double rate_derivative_kernel(double energy, double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("rate_derivative_kernel: T must be positive");
  if (std::abs(energy) * duration < detail::kSmallArgument) return 2.0 * duration;
  return 2.0 * std::sin(energy * duration) / energy;
}

inline double kernel_value(const KernelSpec& kernel, double energy) {
  switch (kernel.kind) {
    case KernelKind::delta_t: return delta_T_kernel(energy, kernel.duration);
    case KernelKind::fejer: return fejer_kernel(energy, kernel.duration);
    case KernelKind::rate_derivative: return rate_derivative_kernel(energy, kernel.duration);
  }
  throw std::logic_error("kernel_value: unknown kind");
}

/// Integral of the kernel over [L, inf) (equal to the integral over (-inf, -L]).
inline double kernel_tail(const KernelSpec& kernel, double cutoff) {
  kernel.validate();
  if (!(cutoff > 0.0)) throw std::invalid_argument("kernel_tail: cutoff must be positive");
  const double T = kernel.duration;
  switch (kernel.kind) {
    case KernelKind::delta_t: return sine_integral_tail(0.5 * cutoff * T) / std::numbers::pi;
    case KernelKind::fejer:
      // 4 sin^2(ET/2) / (T E^2) = 2 (1 - cos ET) / (T E^2)
      return 2.0 / (T * cutoff) - 2.0 * cosine_over_square_tail(cutoff * T);
    case KernelKind::rate_derivative: return 2.0 * sine_integral_tail(cutoff * T);
  }
  throw std::logic_error("kernel_tail: unknown kind");
}

/// Number of equal panels giving each at most half an oscillation of the kernel.
inline int oscillation_panels(double lo, double hi, double duration) {
  const double half_period = std::numbers::pi / duration;
  return std::clamp(static_cast<int>(std::ceil((hi - lo) / half_period)), 1, 1 << 20);
}

/// int_R kernel(E, T) dE, by quadrature on [-L, L] plus the analytic tails.
inline double kernel_normalization(const KernelSpec& kernel, const Tolerance& tol = {}, double cutoff = 50.0) {
  kernel.validate();
  const int panels = oscillation_panels(-cutoff, cutoff, kernel.duration);
  const double core =
      integrate_adaptive_real([&](double e) { return kernel_value(kernel, e); }, -cutoff, cutoff, tol, panels);
  return core + 2.0 * kernel_tail(kernel, cutoff);
}

/// int kernel(E, T) g(E) dE over the real line.
///
/// g is integrated against the kernel on [-L, L]; beyond the cutoff g is taken
/// as constant at its end values, which is exact for constant g and negligible
/// for integrands that decay well inside the cutoff.
inline double weak_limit(const KernelSpec& kernel, const std::function<double(double)>& g, const Tolerance& tol = {},
                         double cutoff = 50.0) {
  kernel.validate();
  const int panels = oscillation_panels(-cutoff, cutoff, kernel.duration);
  const double core = integrate_adaptive_real([&](double e) { return kernel_value(kernel, e) * g(e); }, -cutoff,
                                              cutoff, tol, panels);
  return core + (g(cutoff) + g(-cutoff)) * kernel_tail(kernel, cutoff);
}

/// First-order transition amplitude i M 2 pi delta_T(E).
inline complex first_order_U(complex matrix_element, double energy, double duration) {
  return complex(0.0, 1.0) * matrix_element * (2.0 * std::numbers::pi * delta_T_kernel(energy, duration));
}

/// Single-continuum model of final states around the initial energy.
struct ContinuumToy {
  std::function<complex(double)> matrix_element;
  std::function<double(double)> state_density;
  double initial_energy{0.0};
  double band_lo{-10.0};
  double band_hi{10.0};

  /// Flat toy: constant M and state density.
  static ContinuumToy flat(complex m, double density, double initial_energy, double band_lo, double band_hi) {
    ContinuumToy toy{[m](double) { return m; }, [density](double) { return density; }, initial_energy, band_lo,
                     band_hi};
    toy.validate();
    return toy;
  }

  void validate() const {
    if (!matrix_element || !state_density) throw std::invalid_argument("toy: matrix element and density required");
    if (!(band_lo < initial_energy && initial_energy < band_hi))
      throw std::invalid_argument("toy: initial energy must lie strictly inside the band");
  }

  double half_width() const { return std::min(initial_energy - band_lo, band_hi - initial_energy); }
};

class KernelTooWide : public std::domain_error {
 public:
  KernelTooWide() : std::domain_error("T too small for band") {}
};

/// Transition probability per unit time summed over the continuum:
/// int dE_f nu(E_f) |M(E_f)|^2 K(E_f - E_i, T) over the band.
inline double golden_rate(const ContinuumToy& toy, double duration, const Tolerance& tol = {},
                          KernelKind kind = KernelKind::fejer) {
  toy.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("golden_rate: T must be positive");
  if (4.0 * std::numbers::pi / duration > toy.half_width()) throw KernelTooWide();
  if (kind == KernelKind::delta_t) throw std::invalid_argument("golden_rate: use a rate kernel (fejer or rate_derivative)");
  const KernelSpec kernel{kind, duration};
  auto integrand = [&](double e) {
    return toy.state_density(e) * std::norm(toy.matrix_element(e)) * kernel_value(kernel, e - toy.initial_energy);
  };
  const int panels = oscillation_panels(toy.band_lo, toy.band_hi, duration);
  return integrate_adaptive_real(integrand, toy.band_lo, toy.band_hi, tol, panels);
}

/// The T -> infinity limit 2 pi |M(E_i)|^2 nu(E_i).
inline double golden_rule_limit(const ContinuumToy& toy) {
  return 2.0 * std::numbers::pi * std::norm(toy.matrix_element(toy.initial_energy)) *
         toy.state_density(toy.initial_energy);
}

/// Energy distribution of a packet-described initial state.
struct InitialPacketSpectrum {
  std::function<double(double)> weight;
  double center{0.0};
  double width{1.0};
  /// log of the analytic continuation of the weight, when known (enables
  /// contour shifting).
  std::function<complex(complex)> analytic_log_weight;
  /// Half-width, in units of `width`, of the interval holding the weight's mass.
  double extent{12.0};

  static InitialPacketSpectrum gaussian(double center, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("spectrum width must be positive");
    const double log_norm = -std::log(width * std::sqrt(2.0 * std::numbers::pi));
    InitialPacketSpectrum s;
    s.center = center;
    s.width = width;
    s.weight = [=](double e) {
      const double z = (e - center) / width;
      return std::exp(log_norm - 0.5 * z * z);
    };
    s.analytic_log_weight = [=](complex e) {
      const complex z = (e - center) / width;
      return log_norm - 0.5 * z * z;
    };
    return s;
  }
};

/// mantissa * exp(log_scale); keeps values far below the double range usable.
struct ScaledComplex {
  complex mantissa;
  double log_scale{0.0};

  complex value() const { return mantissa * std::exp(log_scale); }
  double log_abs() const { return std::log(std::abs(mantissa)) + log_scale; }
};

struct BoundaryTermOptions {
  /// Exclusion half-width around the pole, in units of the spectrum width.
  double pole_exclusion{1e-6};
  /// Use the analytic continuation of the weight when available.
  bool allow_contour_shift{true};
};

/// Lower-limit contribution of the second-order time integral, averaged over
/// the initial packet: int dE_i w(E_i) e^{i(E_m - E_i)(-T/2)} / (i (E_m - E_i)),
/// as a principal value when E_m lies inside the weight's support.
///
/// For analytic weights the contour is moved to Im E = (T/2) sigma^2, where a
/// Gaussian integrand no longer oscillates and exponentially small values keep
/// their relative accuracy; the pole adds -pi w(E_m). Otherwise the real-axis
/// integral is used with a symmetric pole exclusion and Richardson extrapolation.
inline ScaledComplex boundary_term_scaled(const InitialPacketSpectrum& spectrum, double intermediate_energy,
                                          double duration, const Tolerance& tol = {},
                                          const BoundaryTermOptions& options = {}) {
  if (!(duration > 0.0)) throw std::invalid_argument("boundary_term: T must be positive");
  if (!spectrum.weight || !(spectrum.width > 0.0)) throw std::invalid_argument("boundary_term: invalid spectrum");
  const double omega = 0.5 * duration;
  const double em = intermediate_energy;
  const double lo = spectrum.center - spectrum.extent * spectrum.width;
  const double hi = spectrum.center + spectrum.extent * spectrum.width;
  const complex i(0.0, 1.0);

  if (options.allow_contour_shift && spectrum.analytic_log_weight) {
    const double shift = omega * spectrum.width * spectrum.width;
    auto exponent = [&](complex e) { return spectrum.analytic_log_weight(e) + i * omega * (e - em); };
    const double line_scale = exponent(complex(spectrum.center, shift)).real();
    const double pole_scale = spectrum.analytic_log_weight(complex(em, 0.0)).real();
    const double scale = std::max(line_scale, pole_scale);
    auto integrand = [&](double x) {
      const complex e(x, shift);
      return std::exp(exponent(e) - scale) / (i * (em - e));
    };
    const complex line = integrate_adaptive(integrand, lo, hi, tol, 8);
    return {line - std::numbers::pi * std::exp(pole_scale - scale), scale};
  }

  auto integrand = [&](double e) { return spectrum.weight(e) * std::exp(i * omega * (e - em)) / (i * (em - e)); };
  const int panels = oscillation_panels(lo, hi, omega);
  if (em <= lo || em >= hi) return {integrate_adaptive(integrand, lo, hi, tol, panels), 0.0};

  auto excluded = [&](double delta) {
    complex total{};
    if (em - delta > lo) total += integrate_adaptive(integrand, lo, em - delta, tol, std::max(1, panels / 2));
    if (em + delta < hi) total += integrate_adaptive(integrand, em + delta, hi, tol, std::max(1, panels / 2));
    return total;
  };
  const double delta = options.pole_exclusion * spectrum.width;
  return {2.0 * excluded(0.5 * delta) - excluded(delta), 0.0};
}

inline complex boundary_term(const InitialPacketSpectrum& spectrum, double intermediate_energy, double duration,
                             const Tolerance& tol = {}, const BoundaryTermOptions& options = {}) {
  return boundary_term_scaled(spectrum, intermediate_energy, duration, tol, options).value();
}

/// (1/2pi) int_{-w/2}^{w/2} e^{iEt} dt at E = 0 with w = multiplier * T: the
/// "delta(0)" obtained from a window of that length.
inline double delta0_heuristic_demo(double duration, double window_multiplier) {
  if (!(duration > 0.0) || !(window_multiplier > 0.0))
    throw std::invalid_argument("delta0_heuristic_demo: T and multiplier must be positive");
  return window_multiplier * duration / (2.0 * std::numbers::pi);
}

}  // namespace wpscat
