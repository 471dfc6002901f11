// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wpscat/scenario.hpp"
#include "wpscat/wpscat.hpp"

using namespace wpscat;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Outcome kernel_normalization_check() {
  double worst = 0.0;
  for (double T : {1.0, 10.0, 100.0}) {
    worst = std::max(worst, std::abs(kernel_normalization({KernelKind::delta_t, T}) - 1.0));
    worst = std::max(worst, std::abs(kernel_normalization({KernelKind::fejer, T}) - 2 * pi));
  }
  return {worst <= 1e-6, "max abs error " + num(worst)};
}

Outcome weak_convergence() {
  auto g = [](double e) { return std::exp(-0.5 * e * e) / std::sqrt(2 * pi); };
  std::vector<double> Ts{10, 20, 40, 80}, err;
  for (double T : Ts) err.push_back(std::abs(weak_limit({KernelKind::fejer, T}, g) - 2 * pi * g(0.0)));
  const double slope = fit_slope(Ts, err);
  return {std::abs(slope + 1.0) <= 0.2, "slope " + num(slope)};
}

Outcome rate_equivalence() {
  const double lo = -10.0, hi = 10.0, e_i = 0.0;
  const auto toy = ContinuumToy::flat({0.7, 0.2}, 1.5, e_i, lo, hi);
  const double T = 200.0 / std::min(e_i - lo, hi - e_i);
  const double fejer = golden_rate(toy, T, {}, KernelKind::fejer);
  const double deriv = golden_rate(toy, T, {}, KernelKind::rate_derivative);
  const double limit = 2 * pi * std::norm(complex(0.7, 0.2)) * 1.5;
  const double a = std::abs(fejer / deriv - 1), b = std::abs(fejer / limit - 1), c = std::abs(deriv / limit - 1);
  return {a <= 0.01 && b <= 0.01 && c <= 0.01,
          "fejer/deriv-1 " + num(a) + ", fejer/limit-1 " + num(b) + ", deriv/limit-1 " + num(c)};
}

Outcome delta0_inconsistency() {
  const double ratio = delta0_heuristic_demo(17.0, 2.0) / delta0_heuristic_demo(17.0, 1.0);
  return {ratio == 2.0, "ratio " + num(ratio)};
}

Outcome boundary_decay() {
  const auto smooth = InitialPacketSpectrum::gaussian(0.0, 1.0);
  const double em = 50.0;
  std::vector<double> logs;
  for (double T : {10.0, 20.0, 40.0, 80.0}) logs.push_back(boundary_term_scaled(smooth, em, T).log_abs());
  bool monotone = true;
  for (std::size_t i = 1; i < logs.size(); ++i) monotone = monotone && logs[i] < logs[i - 1];
  const double drop = logs.back() - logs.front();

  auto spike = InitialPacketSpectrum::gaussian(0.0, 1e-3);
  const double first = std::abs(boundary_term(spike, 1.0, 10.0));
  const double last = std::abs(boundary_term(spike, 1.0, 80.0));
  const double spike_ratio = last / first;
  return {monotone && drop < std::log(1e-3) && spike_ratio > 0.5,
          std::string(monotone ? "monotone" : "not monotone") + ", log10(|B(80)|/|B(10)|) " + num(drop / std::log(10.0)) +
              ", spike ratio " + num(spike_ratio)};
}

Outcome interference_absence() {
  const double R = 1.0, p = 30.0;
  const ScatterScenario s(PacketSpec(R, Vec3{0, 0, p}, 1.0), BornYukawaAmplitude{1.0, 5.0, 1.0}, 0.1);
  const double v = s.packet().speed();
  const double t_min = (norm(s.packet().center()) + 3 * R) / v;
  double worst_overlap = 0.0, worst_flux = 0.0;
  for (double factor : {1.01, 1.5, 2.0, 4.0}) {
    const double t = factor * t_min;
    const auto [inner, outer] = shell_radii(s, t, ShellModel::exact);
    const double theta_min = default_theta_min(s, 0.5 * (inner + outer));
    worst_overlap = std::max(worst_overlap, std::abs(overlap_measure(s, t, theta_min)));
    for (const Vec3& x : detail::shell_samples(s, t, theta_min, 50))
      worst_flux = std::max(worst_flux, norm(interference_flux(s, x, t, default_fd_step(p))));
  }
  return {worst_overlap == 0.0 && worst_flux == 0.0,
          "max overlap " + num(worst_overlap) + ", max |interference flux| " + num(worst_flux)};
}

Outcome shell_geometry() {
  const double R = 2.0;
  const ScatterScenario s(PacketSpec(R, Vec3{0, 0, 40}, 2.0), IsotropicAmplitude{}, 0.1);
  const double v = s.packet().speed();
  double worst_thickness = 0.0, worst_speed = 0.0;
  std::pair<double, double> previous{};
  const std::vector<double> times{1.0, 2.0, 3.5, 5.0, 9.0};
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto radii = shell_radii(s, times[i], ShellModel::exact);
    worst_thickness = std::max(worst_thickness, std::abs(radii.second - radii.first - 2 * R));
    if (i > 0) {
      const double dt = times[i] - times[i - 1];
      worst_speed = std::max(worst_speed, std::abs((radii.first - previous.first) / dt - v));
      worst_speed = std::max(worst_speed, std::abs((radii.second - previous.second) / dt - v));
    }
    previous = radii;
  }
  const bool ok = worst_thickness <= 1e-12 * R && worst_speed <= 1e-12 * v;
  return {ok, "thickness error " + num(worst_thickness) + ", speed error " + num(worst_speed)};
}

// Relative L2 difference over the radial extent of the layer at theta = pi/2,
// detector radius 10 R, with isotropic amplitude.
double linearization_error(double pR) {
  const double R = 1.0;
  const ScatterScenario s(PacketSpec(R, Vec3{0, 0, pR / R}, 1.0), IsotropicAmplitude{}, 0.1);
  const double t = detector_time(s, 10 * R);
  const auto [inner, outer] = shell_radii(s, t, ShellModel::exact);
  const Frame frame = Frame::along(s.packet().direction());
  const Tolerance tol{1e-10, 1e-7, 40000};
  const int n = 24;
  double diff = 0.0, ref = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lo = inner + 0.05 * R, hi = outer - 0.05 * R;
    const double r = lo + (hi - lo) * (i + 0.5) / n;
    const Vec3 x = frame.spherical(r, 0.5 * pi, 0.0);
    const complex approx = scattered_approx(s, x, t);
    const complex exact = scattered_exact(s, x, t, tol);
    diff += std::norm(exact - approx) * r * r;
    ref += std::norm(approx) * r * r;
  }
  return std::sqrt(diff / ref);
}

Outcome linearization_validity() {
  std::vector<double> errors;
  std::string detail;
  for (double pR : {25.0, 50.0, 100.0, 200.0}) {
    errors.push_back(linearization_error(pR));
    detail += (detail.empty() ? "" : ", ") + std::string("pR=") + num(pR) + ": " + num(errors.back());
  }
  bool non_increasing = true;
  for (std::size_t i = 1; i < errors.size(); ++i) non_increasing = non_increasing && errors[i] <= errors[i - 1];
  return {errors[2] <= 0.05 && non_increasing, detail};
}

Outcome stationary_limit() {
  const complex a0(0.6, -0.8);
  double worst_iso = 0.0;
  for (double R : {1.0, 2.0}) {
    const ScatterScenario s(PacketSpec(R, Vec3{0, 0, 100 / R}, 1.0), IsotropicAmplitude{a0}, 0.1);
    const double r = 20 * R;
    for (double theta : {0.4, 1.5, 2.8})
      worst_iso = std::max(worst_iso, std::abs(packet_dcs(s, theta, 0.0, r, detector_time(s, r)) - std::norm(a0)));
  }

  const double p = 200.0, theta = 0.5 * pi;
  const BornYukawaAmplitude born{1.0, p, 1.0};
  const StationaryState state{Vec3{0, 0, p}, 1.0, born};
  const double reference = stationary_dcs(state, theta);
  PacketDcsOptions options;
  options.model = PacketFieldModel::smeared;
  std::vector<double> rel;
  for (double R : {1.0, 2.0}) {
    const ScatterScenario s(PacketSpec(R, Vec3{0, 0, p}, 1.0), born, 0.1);
    const double r = 20 * R;
    rel.push_back(std::abs(packet_dcs(s, theta, 0.0, r, detector_time(s, r), options) - reference) / reference);
  }
  return {worst_iso <= 1e-6 && rel[0] <= 0.02 && rel[1] < rel[0],
          "isotropic error " + num(worst_iso) + ", born rel error pR=200: " + num(rel[0]) + ", pR=400: " + num(rel[1])};
}

Outcome flux_decomposition() {
  const double k = 12.0, mass = 1.5;
  const StationaryState s{Vec3{0, 0, k}, mass, BornYukawaAmplitude{2.0, 3.0, mass}};
  const double h = default_fd_step(k);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 x = Frame::along(s.k).spherical((5.0 + 500.0 * u(rng)) / k, 1e-3 + (pi - 2e-3) * u(rng), 2 * pi * u(rng));
    const auto terms = flux_terms(s, x, h);
    auto total = [&](const Vec3& y) { return stationary_wave(s, y); };
    const Vec3 j = flux_density(total(x), gradient_central(total, x, h), mass).j;
    worst = std::max(worst, norm(terms[0].j + terms[1].j + terms[2].j + terms[3].j - j));
  }
  // plane wave with its exact gradient i k e^{ik.x}
  double plane = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vec3 x{u(rng) * 10, u(rng) * 10, u(rng) * 10};
    const complex psi = incident_wave(s, x);
    const complex ik(0.0, 1.0);
    const CVec3 grad{ik * s.k.x * psi, ik * s.k.y * psi, ik * s.k.z * psi};
    plane = std::max(plane, norm(flux_density(psi, grad, mass).j - s.k / mass));
  }
  const double v = k / mass;
  return {worst <= 1e-9 && plane <= 8 * std::numeric_limits<double>::epsilon() * v,
          "max |sum - total| " + num(worst) + ", plane-wave |j - v| " + num(plane)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"kernel normalization", kernel_normalization_check},
      {"weak convergence rate", weak_convergence},
      {"rate definition equivalence", rate_equivalence},
      {"delta(0) heuristic inconsistency", delta0_inconsistency},
      {"boundary term decay", boundary_decay},
      {"interference absence", interference_absence},
      {"shell geometry", shell_geometry},
      {"linearization validity", linearization_validity},
      {"stationary limit of packet cross section", stationary_limit},
      {"flux decomposition identity", flux_decomposition},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s (%s) [%.1f s]\n", i + 1, criteria[i].first, outcome.pass ? "PASS" : "FAIL",
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
