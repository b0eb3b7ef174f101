#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cavity/core_params.hpp"

using namespace cavity;

TEST(Regime, Classification) {
  EXPECT_EQ(regime_of(0.0), Regime::below);
  EXPECT_EQ(regime_of(0.999), Regime::below);
  EXPECT_EQ(regime_of(1.0), Regime::critical);
  EXPECT_EQ(regime_of(1.0 + 1e-12), Regime::critical);
  EXPECT_EQ(regime_of(1.5), Regime::above);
  EXPECT_EQ(regime_of(-1.5), Regime::above);
}

TEST(Config, ValidationRejectsBadInput) {
  ResonanceConfig c;
  EXPECT_NO_THROW(c.validate());
  c.p = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ResonanceConfig{};
  c.tau_grid = {0.5, 0.25};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.tau_grid = {};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(ResonanceConfig{}.sigma(), 1);
  c = ResonanceConfig{};
  c.p = 3;
  EXPECT_EQ(c.sigma(), -1);
}

TEST(Kinematics, BelowThresholdValues) {
  const double gamma = 0.6, a = 0.8;
  const KinPoint k = Kinematics(gamma).at(1.3);
  EXPECT_NEAR(k.S, std::sinh(a * 1.3) / a, 1e-14);
  EXPECT_NEAR(k.C, std::cosh(a * 1.3), 1e-14);
  EXPECT_NEAR(k.gg, 1.0 + k.S * k.S, 1e-12);
  EXPECT_NEAR(std::abs(k.lambda), 1.0, 1e-15);
  // lambda = sqrt(1 - gamma^2 kappa^2) + i gamma kappa below threshold
  EXPECT_NEAR(k.lambda.real(), std::sqrt(1 - gamma * gamma * k.kappa * k.kappa), 1e-14);
  EXPECT_NEAR(k.lambda.imag(), gamma * k.kappa, 1e-14);
}

TEST(Kinematics, ThresholdAndAbove) {
  const KinPoint c = Kinematics(1.0).at(2.0);
  EXPECT_DOUBLE_EQ(c.S, 2.0);
  EXPECT_DOUBLE_EQ(c.C, 1.0);
  const double gamma = 2.0, at = std::sqrt(3.0);
  const KinPoint k = Kinematics(gamma).at(1.1);
  EXPECT_NEAR(k.S, std::sin(at * 1.1) / at, 1e-14);
  EXPECT_NEAR(k.gg, 1.0 + k.S * k.S, 1e-12);
}

TEST(Kinematics, ContinuousAcrossThreshold) {
  for (double x : {0.3, 1.0, 2.5}) {
    const KinPoint lo = Kinematics(1.0 - 1e-7).at(x), mid = Kinematics(1.0).at(x), hi = Kinematics(1.0 + 1e-7).at(x);
    EXPECT_NEAR(lo.S, mid.S, 1e-5 * mid.S);
    EXPECT_NEAR(hi.S, mid.S, 1e-5 * mid.S);
    EXPECT_NEAR(lo.kappa, hi.kappa, 1e-5);
  }
}

TEST(Kinematics, SmallArgumentSeriesMatchesDirect) {
  const Kinematics k(0.3);
  const double x = 0.9e-4 / k.a();
  EXPECT_NEAR(k.S(x), std::sinh(k.a() * x) / k.a(), 1e-18);
}

TEST(Kinematics, PhaseUnwrapsAboveThreshold) {
  // theta stays continuous through several windings of g.
  const Kinematics k(1.5);
  double prev = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double th = k.at(i * 0.01).theta;
    EXPECT_LT(std::abs(th - prev), 0.1);
    prev = th;
  }
  EXPECT_GT(prev, 2.0 * std::numbers::pi);
}

TEST(Kinematics, RejectsNegativeArgument) { EXPECT_THROW(Kinematics(0.0).at(-1.0), std::domain_error); }

TEST(Units, LabConversion) {
  ResonanceConfig c;
  c.epsilon = 1e-8;
  c.L0 = 0.03;
  EXPECT_NEAR(to_lab_units(c, 1.0), 1e-8 * std::numbers::pi * kSpeedOfLight / 0.06, 1e-6);
  EXPECT_NEAR(kinematics_eval(c, 0.5).S, std::sinh(0.5), 1e-14);
}
