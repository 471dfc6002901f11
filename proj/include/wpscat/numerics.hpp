#pragma once

// Quadrature and differentiation primitives shared by every other module.
//
// The adaptive integrator is a globally adaptive Gauss-Kronrod (7, 15) scheme
// in the style of QUADPACK's QAG: the interval with the largest error estimate
// is bisected until the summed error meets the tolerance. All routines are
// pure functions of their inputs; results are reproducible bit-for-bit.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "wpscat/vec3.hpp"

namespace wpscat {

struct Tolerance {
  double abs_tol{1e-9};
  double rel_tol{1e-7};
  int max_subdivisions{2000};

  void validate() const {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("Tolerance: abs_tol must be positive");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("Tolerance: rel_tol must be positive");
    if (max_subdivisions < 1) throw std::invalid_argument("Tolerance: max_subdivisions must be >= 1");
  }

  double target(double magnitude) const { return std::max(abs_tol, rel_tol * magnitude); }
};

/// Raised when adaptive refinement runs out of subdivisions. Carries the best
/// estimate so callers can decide whether it is usable.
class ToleranceNotReached : public std::runtime_error {
 public:
  ToleranceNotReached(complex best, double error, int subdivisions)
      : std::runtime_error(describe(best, error, subdivisions)), best_estimate_(best), error_estimate_(error) {}

  complex best_estimate() const { return best_estimate_; }
  double error_estimate() const { return error_estimate_; }

 private:
  static std::string describe(complex best, double error, int subdivisions) {
    std::ostringstream os;
    os.precision(6);
    os << "tolerance not reached after " << subdivisions << " subdivisions (estimate " << best.real() << "+"
       << best.imag() << "i, error " << error << ")";
    return os.str();
  }

  complex best_estimate_;
  double error_estimate_;
};

template <typename V>
struct QuadratureResult {
  V value{};
  double error{0.0};
  int intervals{0};
  int evaluations{0};
};

namespace detail {

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss points.
inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename V>
struct Segment {
  double lo, hi;
  V value;
  double error;
};

template <typename V, typename F>
Segment<V> gauss_kronrod_15(const F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);

  std::array<V, 15> fv;
  fv[7] = static_cast<V>(f(center));
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    fv[j] = static_cast<V>(f(center - dx));
    fv[14 - j] = static_cast<V>(f(center + dx));
  }

  V kronrod = fv[7] * kKronrodWeights[7];
  V gauss = fv[7] * kGaussWeights[3];
  double abs_sum = std::abs(fv[7]) * kKronrodWeights[7];
  for (int j = 0; j < 7; ++j) {
    const V pair = fv[j] + fv[14 - j];
    kronrod += pair * kKronrodWeights[j];
    abs_sum += (std::abs(fv[j]) + std::abs(fv[14 - j])) * kKronrodWeights[j];
    if (j % 2 == 1) gauss += pair * kGaussWeights[j / 2];
  }

  const V mean = kronrod * 0.5;
  double asc = kKronrodWeights[7] * std::abs(fv[7] - mean);
  for (int j = 0; j < 7; ++j) asc += kKronrodWeights[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));

  const double scale = std::abs(half);
  double error = std::abs((kronrod - gauss) * half);
  const double resasc = asc * scale;
  const double resabs = abs_sum * scale;
  if (resasc != 0.0 && error != 0.0) error = resasc * std::min(1.0, std::pow(200.0 * error / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) error = std::max(50.0 * eps * resabs, error);

  return {lo, hi, kronrod * half, error};
}

template <typename V>
double magnitude(const V& v) {
  return std::abs(v);
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [lo, hi].
///
/// V is the value type (double or std::complex<double>). The interval is first
/// split into `initial_panels` equal pieces, which helps on integrands that
/// oscillate many times across the range. Throws ToleranceNotReached when the
/// error target max(abs_tol, rel_tol |I|) is not met within max_subdivisions.
template <typename V, typename F>
QuadratureResult<V> integrate_adaptive_result(const F& f, double lo, double hi, const Tolerance& tol,
                                              int initial_panels = 1) {
  tol.validate();
  if (!(lo < hi)) throw std::invalid_argument("integrate_adaptive: requires lo < hi");
  if (initial_panels < 1) initial_panels = 1;

  using Seg = detail::Segment<V>;
  auto by_error = [](const Seg& a, const Seg& b) { return a.error < b.error; };

  std::vector<Seg> heap;
  heap.reserve(static_cast<std::size_t>(std::max(initial_panels, 1) + tol.max_subdivisions + 1));
  const double width = (hi - lo) / initial_panels;
  for (int i = 0; i < initial_panels; ++i) {
    const double a = lo + i * width;
    const double b = (i + 1 == initial_panels) ? hi : lo + (i + 1) * width;
    heap.push_back(detail::gauss_kronrod_15<V>(f, a, b));
  }
  std::make_heap(heap.begin(), heap.end(), by_error);

  auto totals = [&heap] {
    V sum{};
    double err = 0.0;
    for (const auto& s : heap) {
      sum += s.value;
      err += s.error;
    }
    return std::pair{sum, err};
  };

  auto [value, error] = totals();
  int subdivisions = 0;
  while (error > tol.target(detail::magnitude(value))) {
    if (subdivisions >= tol.max_subdivisions) {
      throw ToleranceNotReached(complex(value), error, subdivisions);
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Seg worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      // Interval can no longer be bisected in double precision.
      throw ToleranceNotReached(complex(value), error, subdivisions);
    }
    const Seg left = detail::gauss_kronrod_15<V>(f, worst.lo, mid);
    const Seg right = detail::gauss_kronrod_15<V>(f, mid, worst.hi);
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    ++subdivisions;

    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    if (subdivisions % 64 == 0) std::tie(value, error) = totals();
  }

  // Final sum in interval order so the result does not depend on heap layout.
  std::sort(heap.begin(), heap.end(), [](const Seg& a, const Seg& b) { return a.lo < b.lo; });
  std::tie(value, error) = totals();
  const int intervals = static_cast<int>(heap.size());
  return {value, error, intervals, 15 * (initial_panels + 2 * subdivisions)};
}

/// Complex-valued adaptive integral of f over [lo, hi].
template <typename F>
complex integrate_adaptive(const F& f, double lo, double hi, const Tolerance& tol = {}, int initial_panels = 1) {
  return integrate_adaptive_result<complex>(f, lo, hi, tol, initial_panels).value;
}

/// Real-valued variant; avoids carrying a zero imaginary part through the sums.
template <typename F>
double integrate_adaptive_real(const F& f, double lo, double hi, const Tolerance& tol = {}, int initial_panels = 1) {
  return integrate_adaptive_result<double>(f, lo, hi, tol, initial_panels).value;
}

/// Sine and cosine integrals Si(x), Ci(x) for x > 0.
///
/// Power series for x <= 2, otherwise the continued fraction for E1(ix)
/// evaluated with the modified Lentz method.
struct SiCi {
  double si;
  double ci;
  double si_tail;  ///< int_x^inf sin(t)/t dt = pi/2 - Si(x), without cancellation
};

inline SiCi sine_cosine_integrals(double x) {
  constexpr double pi = std::numbers::pi;
  constexpr double euler_gamma = 0.577215664901532860606512090082402431;
  constexpr double eps = 1e-16;
  if (!(x > 0.0)) throw std::invalid_argument("sine_cosine_integrals: requires x > 0");

  if (x <= 2.0) {
    double si = 0.0, ci = 0.0;
    double term = 1.0;  // x^n / n!
    for (int n = 1; n < 60; ++n) {
      term *= x / n;
      const double contribution = term / n;
      // n odd feeds Si, n even feeds Ci, with alternating signs.
      const int sign = ((n - 1) / 2) % 2 == 0 ? 1 : -1;
      if (n % 2 == 1) {
        si += sign * contribution;
      } else {
        ci += (n / 2 % 2 == 1 ? -1 : 1) * contribution;
      }
      if (contribution < eps * std::abs(si)) break;
    }
    ci += euler_gamma + std::log(x);
    return {si, ci, 0.5 * pi - si};
  }

  constexpr double tiny = 1e-300;
  complex b(1.0, x);
  complex c(1.0 / tiny, 0.0);
  complex d = 1.0 / b;
  complex h = d;
  for (int i = 1; i < 100000; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const complex del = c * d;
    h *= del;
    if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < eps) break;
  }
  h *= complex(std::cos(x), -std::sin(x));
  return {0.5 * pi + h.imag(), -h.real(), -h.imag()};
}

inline double sine_integral(double x) {
  if (x == 0.0) return 0.0;
  const double s = sine_cosine_integrals(std::abs(x)).si;
  return x < 0.0 ? -s : s;
}

/// int_x^inf sin(t)/t dt for x > 0.
inline double sine_integral_tail(double x) { return sine_cosine_integrals(x).si_tail; }

/// int_x^inf cos(t)/t^2 dt for x > 0, by parts: cos(x)/x - int_x^inf sin(t)/t dt.
inline double cosine_over_square_tail(double x) { return std::cos(x) / x - sine_integral_tail(x); }

/// Integral of f over [lo, inf) where beyond `cutoff` the integrand is exactly
/// amplitude * sin(omega x) / x. The finite part is integrated adaptively and
/// the tail is added in closed form from the sine integral.
template <typename F>
double integrate_with_sine_tail(const F& f, double lo, double cutoff, double omega, double amplitude,
                                const Tolerance& tol = {}, int initial_panels = 1) {
  if (!(cutoff > 0.0) || !(omega > 0.0)) throw std::invalid_argument("integrate_with_sine_tail: cutoff, omega > 0");
  const double finite = integrate_adaptive_real(f, lo, cutoff, tol, initial_panels);
  return finite + amplitude * sine_integral_tail(omega * cutoff);
}

/// Central-difference gradient of a complex field, O(h^2) accurate.
template <typename F>
CVec3 gradient_central(const F& f, const Vec3& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("gradient_central: step must be positive");
  CVec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 plus = x, minus = x;
    plus[i] += h;
    minus[i] -= h;
    g[static_cast<std::size_t>(i)] = (complex(f(plus)) - complex(f(minus))) / (2.0 * h);
  }
  return g;
}

}  // namespace wpscat
