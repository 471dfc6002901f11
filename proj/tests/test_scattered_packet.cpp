#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wpscat/scattered_packet.hpp"

using namespace wpscat;

namespace {

constexpr double pi = std::numbers::pi;

ScatterScenario isotropic(double radius = 1.0, double p = 20.0, complex a0 = {1.0, 0.0}) {
  return ScatterScenario(PacketSpec(radius, Vec3{0, 0, p}, 1.0), IsotropicAmplitude{a0}, radius / 10);
}

// Direct quadrature of int d^3k e^{-iE_k t} I~(k) A(theta_kx) e^{i|k|r}/r in
// spherical coordinates (q, theta_q, phi_q) about p, with the polar axis along
// a fixed lab direction.
complex superposition_oracle(const ScatterScenario& s, const Vec3& x, double t, double cutoff) {
  const PacketSpec& packet = s.packet();
  const double r = norm(x);
  const Tolerance tol{1e-12, 1e-8, 20000};
  auto over_q = [&](double q) {
    auto over_c = [&](double c) {
      const double sn = std::sqrt(std::max(0.0, 1 - c * c));
      auto over_phi = [&](double phi) {
        const Vec3 k = packet.momentum() + q * Vec3{sn * std::cos(phi), sn * std::sin(phi), c};
        const double kappa = norm(k);
        const double energy = kappa * kappa / (2 * packet.mass());
        return packet_fourier(packet, k) * amplitude_eval(s.amplitude(), kappa, angle_between(k, x)) *
               std::exp(complex(0, kappa * r - energy * t)) / r;
      };
      return integrate_adaptive(over_phi, 0.0, 2 * pi, tol, 6);
    };
    return q * q * integrate_adaptive(over_c, -1.0, 1.0, tol, 6);
  };
  return integrate_adaptive(over_q, 0.0, cutoff, tol, 24);
}

}  // namespace

TEST(ScatterScenario, EnforcesSeparation) {
  EXPECT_NO_THROW(ScatterScenario(PacketSpec(1.0, Vec3{0, 0, 1}, 1.0), IsotropicAmplitude{}, 0.1));
  EXPECT_THROW(ScatterScenario(PacketSpec(1.0, Vec3{0, 0, 1}, 1.0), IsotropicAmplitude{}, 0.11), std::invalid_argument);
  EXPECT_THROW(ScatterScenario(PacketSpec(1.0, Vec3{0, 0, 1}, 1.0), IsotropicAmplitude{}, 0.0), std::invalid_argument);
}

TEST(InteractionWindow, Examples) {
  auto window = [](double R, double v) {
    return interaction_window(ScatterScenario(PacketSpec(R, Vec3{0, 0, v}, 1.0), IsotropicAmplitude{}, R / 10));
  };
  EXPECT_EQ(window(1.0, 1.0), (std::pair{0.0, 2.0}));
  EXPECT_EQ(window(2.0, 4.0), (std::pair{0.0, 1.0}));
  EXPECT_DOUBLE_EQ(window(6.0, 3.0).second, 3.0 * window(2.0, 3.0).second);
}

TEST(ShellSupport, LayerMode) {
  const ScatterScenario s = isotropic(1.0, 5.0);
  const double t = 30.0, vt = 5.0 * t;
  EXPECT_TRUE(shell_support(s, vt, t, ShellModel::layer));
  EXPECT_FALSE(shell_support(s, vt + 1.5, t, ShellModel::layer));
  EXPECT_TRUE(shell_support(s, vt - 1.0, t, ShellModel::layer));
  EXPECT_TRUE(shell_support(s, vt + 1.0, t, ShellModel::layer));
  const auto [inner, outer] = shell_radii(s, t, ShellModel::layer);
  EXPECT_DOUBLE_EQ(outer - inner, 2.0);
  EXPECT_DOUBLE_EQ(inner, vt - 1.0);
}

TEST(ShellSupport, ExactMode) {
  const ScatterScenario s = isotropic(1.0, 5.0);
  const double t = 4.0, vt = 20.0;
  // |r - vt + R| <= R
  EXPECT_TRUE(shell_support(s, vt - 1.0, t, ShellModel::exact));
  EXPECT_TRUE(shell_support(s, vt, t, ShellModel::exact));
  EXPECT_TRUE(shell_support(s, vt - 2.0, t, ShellModel::exact));
  EXPECT_FALSE(shell_support(s, vt + 0.01, t, ShellModel::exact));
  EXPECT_FALSE(shell_support(s, vt - 2.01, t, ShellModel::exact));
  const auto [inner, outer] = shell_radii(s, t, ShellModel::exact);
  EXPECT_DOUBLE_EQ(inner, vt - 2.0);
  EXPECT_DOUBLE_EQ(outer, vt);
}

TEST(ShellSupport, AutomaticSwitchesAtTenRadii) {
  const ScatterScenario s = isotropic(1.0, 1.0);
  // at r >= 10 R the layer form applies: r = vt + 0.5 is inside the layer only
  EXPECT_TRUE(shell_support(s, 20.5, 20.0));
  EXPECT_FALSE(shell_support(s, 5.5, 5.0));
  EXPECT_THROW(shell_support(s, 0.0, 1.0), DomainError);
}

TEST(ShellSupport, InflatesAtSpeedWithConstantThickness) {
  const ScatterScenario s = isotropic(1.5, 7.0);
  const auto [i0, o0] = shell_radii(s, 10.0);
  for (double t : {11.0, 13.5, 20.0, 40.0}) {
    const auto [i1, o1] = shell_radii(s, t);
    EXPECT_NEAR(i1 - i0, 7.0 * (t - 10.0), 1e-12);
    EXPECT_NEAR(o1 - o0, 7.0 * (t - 10.0), 1e-12);
    EXPECT_NEAR(o1 - i1, 3.0, 1e-12);
  }
}

TEST(DetectorTime, CentreOfTheLayer) {
  const ScatterScenario s = isotropic(2.0, 3.0);
  const double r = 40.0, t = detector_time(s, r);
  const auto [inner, outer] = shell_radii(s, t);
  EXPECT_NEAR(0.5 * (inner + outer), r, 1e-12);
}

TEST(ScatteredApprox, VanishesOffShell) {
  const ScatterScenario s = isotropic();
  const double t = 2.0, vt = 40.0;
  EXPECT_EQ(scattered_approx(s, Vec3{vt + 0.5, 0, 0}, t), complex(0, 0));
  EXPECT_EQ(scattered_approx(s, Vec3{0, vt - 2.5, 0}, t), complex(0, 0));
}

TEST(ScatteredApprox, ModulusOnShell) {
  const ScatterScenario s(PacketSpec(1.0, Vec3{0, 0, 20}, 1.0), BornYukawaAmplitude{1.0, 3.0, 1.0}, 0.1);
  const double r = 30.0, t = detector_time(s, r);
  for (double theta : {0.3, 1.5, 3.0}) {
    const Vec3 x = Frame::along(Vec3{0, 0, 1}).spherical(r, theta, 1.0);
    EXPECT_NEAR(std::abs(scattered_approx(s, x, t)), std::abs(amplitude_eval(s.amplitude(), 20, theta)) / r, 1e-15);
  }
}

TEST(ScatteredApprox, EntersSupportWhenFrontArrives) {
  const ScatterScenario s = isotropic(1.0, 2.0);
  const Vec3 x{0, 1.0, 0};
  EXPECT_EQ(scattered_approx(s, x, 0.0), complex(0, 0));
  EXPECT_NE(scattered_approx(s, x, 0.5), complex(0, 0));
  EXPECT_THROW(scattered_approx(s, Vec3{}, 0.0), DomainError);
}

TEST(ScatteredField, SupportPredicateCoversValues) {
  const ScatterScenario s = isotropic(1.0, 4.0);
  const ComplexField f = scattered_field(s);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 x{u(rng), u(rng), u(rng)};
    if (std::abs(f(x, 2.5)) > kSupportThreshold / norm(x)) {
      EXPECT_TRUE(f.support_test(x, 2.5));
    }
  }
}

TEST(ScatteredExact, ZeroAmplitude) {
  const ScatterScenario s = isotropic(1.0, 20.0, {0, 0});
  EXPECT_EQ(scattered_exact(s, Vec3{5, 0, 0}, 0.3), complex(0, 0));
  EXPECT_THROW(scattered_exact(s, Vec3{0.05, 0, 0}, 0.3), DomainError);
}

TEST(ScatteredExact, MatchesDirectSuperpositionIsotropic) {
  const ScatterScenario s = isotropic(1.0, 4.0, {0.7, -0.2});
  const Vec3 x = Frame::along(Vec3{0, 0, 1}).spherical(3.0, 1.2, 0.4);
  const double t = 0.6, cutoff = 12.0;
  const complex oracle = superposition_oracle(s, x, t, cutoff);
  const complex value = scattered_exact(s, x, t, {1e-12, 1e-9, 20000}, {cutoff, false});
  EXPECT_LT(std::abs(value - oracle), 1e-6 * std::abs(oracle));
}

TEST(ScatteredExact, MatchesDirectSuperpositionBornOffAxis) {
  const ScatterScenario s(PacketSpec(1.0, Vec3{0, 0, 3.0}, 1.0, Vec3{0.3, -0.2, -1.0}), BornYukawaAmplitude{1.0, 2.0, 1.0},
                          0.1);
  const Vec3 x = Frame::along(Vec3{0, 0, 1}).spherical(2.5, 1.9, -0.7);
  const double t = 0.8, cutoff = 8.0;
  const complex oracle = superposition_oracle(s, x, t, cutoff);
  const complex value = scattered_exact(s, x, t, {1e-12, 1e-9, 20000}, {cutoff, false});
  EXPECT_LT(std::abs(value - oracle), 1e-6 * std::abs(oracle));
}

TEST(ScatteredExact, RadialDerivativeMatchesFiniteDifference) {
  const ScatterScenario s = isotropic(1.0, 10.0);
  const Frame frame = Frame::along(Vec3{0, 0, 1});
  const double r = 8.0, theta = 1.4, t = detector_time(s, r) + 0.03;
  const Tolerance tol{1e-13, 1e-10, 20000};
  const ExactOptions plain{40.0, false}, deriv{40.0, true};
  const double h = 1e-4;
  const complex fd = (scattered_exact(s, frame.spherical(r + h, theta, 0), t, tol, plain) -
                      scattered_exact(s, frame.spherical(r - h, theta, 0), t, tol, plain)) /
                     (2 * h);
  const complex d = scattered_exact(s, frame.spherical(r, theta, 0), t, tol, deriv);
  EXPECT_LT(std::abs(d - fd), 1e-5 * std::abs(d));
}

TEST(ScatteredExact, SmallFarFromTheLayer) {
  const ScatterScenario s = isotropic(1.0, 200.0);
  const double r = 20.0, v = s.packet().speed();
  // 8 R ahead of the layer's outer edge and 8 R behind its inner edge
  for (double t : {(r - 8.0) / v, (r + 10.0) / v}) {
    ASSERT_FALSE(shell_support(s, r, t, ShellModel::exact));
    const complex value = scattered_exact(s, Vec3{r, 0, 0}, t, {1e-10, 1e-7, 40000});
    EXPECT_LT(std::abs(value), 1e-3 / r) << t;
  }
}

TEST(Overlap, ZeroForDisjointSupports) {
  const ScatterScenario s = isotropic(1.0, 10.0);
  const double t = (norm(s.packet().center()) + 3.5) / s.packet().speed();
  EXPECT_EQ(overlap_measure(s, t, pi / 6), 0.0);
}

TEST(Overlap, ZeroAmplitude) {
  const ScatterScenario s = isotropic(1.0, 10.0, {0, 0});
  EXPECT_EQ(overlap_measure(s, 0.1, 0.01), 0.0);
}

TEST(Overlap, PositiveWhenForwardConeIncluded) {
  const ScatterScenario s = isotropic(1.0, 10.0);
  const double t = 0.25;  // vt = 2.5: ball centre at 1.5, layer [0.5, 2.5]
  const double m = overlap_measure(s, t, 0.05);
  EXPECT_GT(m, 0.0);
  EXPECT_LT(m, 1.0);
}

TEST(Overlap, RejectsBadAngle) {
  const ScatterScenario s = isotropic();
  EXPECT_THROW(overlap_measure(s, 1.0, 0.0), DomainError);
  EXPECT_THROW(overlap_measure(s, 1.0, pi), DomainError);
}

TEST(InterferenceFlux, ZeroOutsideBothSupports) {
  const ScatterScenario s = isotropic(1.0, 10.0);
  const Vec3 j = interference_flux(s, Vec3{50, 50, 50}, 1.0, 1e-4);
  EXPECT_EQ(j, (Vec3{0, 0, 0}));
}

TEST(InterferenceFlux, ZeroOnShellAwayFromBall) {
  const ScatterScenario s = isotropic(1.0, 10.0);
  const double r = 30.0, t = detector_time(s, r);
  const Vec3 x = Frame::along(Vec3{0, 0, 1}).spherical(r, 1.0, 0.0);
  ASSERT_NE(scattered_approx(s, x, t), complex(0, 0));
  EXPECT_EQ(interference_flux(s, x, t, 1e-4), (Vec3{0, 0, 0}));
}

TEST(InterferenceFlux, NonzeroInsideBoth) {
  const ScatterScenario s = isotropic(1.0, 10.0);
  const double t = 0.25;
  const Vec3 x{0.0, 0.1, 2.0};  // inside the ball (centre z = 1.5) and the layer
  ASSERT_NE(free_packet(s.packet(), x, t), complex(0, 0));
  ASSERT_NE(scattered_approx(s, x, t), complex(0, 0));
  EXPECT_GT(norm(interference_flux(s, x, t, 1e-4)), 0.0);
}

TEST(PacketDcs, IsotropicEqualsStationary) {
  const complex a0(0.8, 0.6);
  for (double R : {1.0, 3.0}) {
    const ScatterScenario s = isotropic(R, 50.0 / R, a0);
    for (double factor : {15.0, 40.0}) {
      const double r = factor * R;
      for (double theta : {0.5, 1.5, 2.9}) {
        EXPECT_NEAR(packet_dcs(s, theta, 0.3, r, detector_time(s, r)), std::norm(a0), 1e-6);
        PacketDcsOptions smeared;
        smeared.model = PacketFieldModel::smeared;
        EXPECT_NEAR(packet_dcs(s, theta, 0.3, r, detector_time(s, r), smeared), std::norm(a0), 1e-6);
      }
    }
  }
}

TEST(PacketDcs, ZeroAmplitude) {
  const ScatterScenario s = isotropic(1.0, 50.0, {0, 0});
  EXPECT_EQ(packet_dcs(s, 1.0, 0.0, 20.0, detector_time(s, 20.0)), 0.0);
}

TEST(PacketDcs, RejectsDetectorOffShell) {
  const ScatterScenario s = isotropic(1.0, 50.0);
  EXPECT_THROW(packet_dcs(s, 1.0, 0.0, 20.0, detector_time(s, 20.0) + 3.0 / 50.0), DetectorOutsideSupport);
  EXPECT_THROW(packet_dcs(s, 4.0, 0.0, 20.0, detector_time(s, 20.0)), DomainError);
}

TEST(PacketDcs, BornAngularRatioMatchesStationary) {
  const double p = 200.0, R = 1.0;
  const BornYukawaAmplitude born{1.0, p, 1.0};
  const ScatterScenario s(PacketSpec(R, Vec3{0, 0, p}, 1.0), born, 0.1);
  const StationaryState st{Vec3{0, 0, p}, 1.0, born};
  const double r = 20 * R, t = detector_time(s, r);
  PacketDcsOptions options;
  options.model = PacketFieldModel::smeared;
  const double back = packet_dcs(s, pi, 0.0, r, t, options);
  for (double theta : {0.6, 1.2, 2.2}) {
    const double ratio = packet_dcs(s, theta, 0.0, r, t, options) / back;
    const double expected = stationary_dcs(st, theta) / stationary_dcs(st, pi);
    EXPECT_NEAR(ratio / expected, 1.0, 0.02) << theta;
  }
}
