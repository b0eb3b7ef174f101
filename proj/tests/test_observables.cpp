#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cavity/observables.hpp"

using namespace cavity;
using std::numbers::pi;

namespace {

double n_state_total(int p, double gamma, const InitialState& s, double tau) {
  const KinPoint kin = Kinematics(gamma).at(p * tau);
  const long M = state_row_cutoff(p, kin, s);
  const StateRows rows(p, kin, s, M);
  double acc = 0.0;
  for (long m = 1; m <= M; ++m) acc += state_occupation(rows, s, m);
  return acc;
}

} // namespace

TEST(Energy, VacuumClosedForm) {
  for (double tau : {0.1, 0.5, 1.3}) {
    const double e = std::pow(std::sinh(2.0 * tau), 2) / 4.0;
    EXPECT_NEAR(vacuum_energy(2, 0.0, tau), e, 1e-12 * e);
    EXPECT_NEAR(total_energy(2, 0.0, InitialState::vacuum(), tau), e, 1e-12 * e);
  }
  EXPECT_EQ(vacuum_energy(1, 0.3, 2.0), 0.0);
}

TEST(Energy, SpectrumSumMatchesClosedForm) {
  const std::vector<double> grid{0.25, 0.5, 0.8};
  for (int p : {2, 3})
    for (double gamma : {0.0, 1.0, 1.6}) {
      const VacuumSpectrum vs = vacuum_spectrum(p, gamma, grid, 8);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double e = vacuum_energy(p, gamma, grid[i]);
        EXPECT_NEAR(vs.energy[i], e, 1e-9 * e) << p << " " << gamma << " " << grid[i];
      }
    }
}

TEST(Energy, CoherentPhaseContrastApproachesThree) {
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double e = total_energy(2, 0.0, InitialState::coherent(1, std::polar(3.0, pi * i / 64.0)), 3.0);
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  EXPECT_NEAR(hi / lo, 3.0, 0.06);
}

TEST(Energy, PeriodicAboveThreshold) {
  const double gamma = 1.5, p = 2;
  const double period = pi / (p * std::sqrt(gamma * gamma - 1.0));
  const InitialState s = InitialState::coherent(1, cplx(0.4, 0.9));
  for (double tau : {0.1, 0.37})
    EXPECT_NEAR(total_energy(2, gamma, s, tau + period), total_energy(2, gamma, s, tau), 1e-9);
}

TEST(Energy, SecondOrderEquation) {
  const InitialState vac = InitialState::vacuum();
  EXPECT_EQ(energy_ode_residual(1, 0.0, vac, 0.0, 0.0, 0.0, 1e-3), 0.0);
  const double h = 1e-3;
  for (int p : {1, 2, 3})
    for (double gamma : {0.0, 0.5, 1.0, 1.5}) {
      const InitialState s = InitialState::coherent(2, cplx(0.7, -0.4));
      auto E = [&](double t) { return total_energy(p, gamma, s, t); };
      const double tau = 0.3;
      const double r = energy_ode_residual(p, gamma, s, E(tau - h), E(tau), E(tau + h), h);
      EXPECT_LT(std::abs(r), 1e-4 * std::max(1.0, std::abs(energy_ode_rhs(p, gamma, s, E(tau))))) << p << " " << gamma;
    }
}

TEST(Energy, StateSumMatchesClosedForm) {
  const InitialState s = InitialState::coherent(1, cplx(1.2, 0.5));
  const ObservableSeries os = observable_series(2, 0.3, s, {0.0, 0.4, 0.7}, 12);
  for (std::size_t i = 0; i < os.tau.size(); ++i)
    EXPECT_NEAR(os.energy_sum[i], os.energy_closed[i], 1e-6 * os.energy_closed[i]) << os.tau[i];
  EXPECT_LT(os.tail.back(), 1e-8);
}

TEST(Occupation, VacuumRoutesAgree) {
  const std::vector<double> grid{0.3, 0.6};
  const VacuumSpectrum vs = vacuum_spectrum(2, 0.4, grid, 6);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const KinPoint kin = Kinematics(0.4).at(2 * grid[i]);
    for (long m = 1; m <= 6; ++m) {
      const double d = vacuum_occupation_direct(2, kin, m);
      EXPECT_NEAR(vs.occupation[i][m - 1], d, 1e-9 * std::max(d, 1e-3)) << m;
    }
  }
}

TEST(Occupation, NonNegative) {
  for (int p : {2, 3})
    for (double gamma : {0.0, 0.5, 1.0, 1.5}) {
      const CoefficientTable t = build_table(p, gamma, 0.7, 200, 30);
      for (long m = 1; m <= 30; ++m)
        EXPECT_GE(mode_occupation(t, InitialState::vacuum(), m), -1e-10) << p << " " << gamma << " " << m;
    }
}

TEST(Occupation, ThermalCooling) {
  const double T = 5.0, tau = 0.5;
  const InitialState s = InitialState::thermal(T, 256);
  const KinPoint kin = Kinematics(0.0).at(tau);
  const long M = state_row_cutoff(1, kin, s);
  const StateRows rows(1, kin, s, M);
  EXPECT_LT(rows.norm_deficit(), 1e-10);
  const double kap = std::tanh(tau);
  double total = 0.0;
  for (long m = 1; m <= M; ++m) {
    const double Nm = state_occupation(rows, s, m);
    total += Nm;
    if (m <= 20) { EXPECT_NEAR(m * Nm, T * (1.0 - std::pow(kap, 2 * m)), 1e-8) << m; }
  }
  EXPECT_NEAR(total, initial_photons(s), 1e-6 * total);
}

TEST(Curvature, FormsAgree) {
  for (int p : {2, 3, 4})
    for (double gamma : {0.0, 0.7, 1.0, 1.8})
      for (double x : {0.2, 1.1, 2.5}) {
        const KinPoint kin = Kinematics(gamma).at(x);
        const double a = nvac_total_curvature(p, kin), b = nvac_total_curvature_coefficients(p, kin);
        EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(a))) << p << " " << gamma << " " << x;
        if (p == 2) { EXPECT_NEAR(a, nvac_curvature_elliptic_p2(kin), 1e-9 * std::max(1.0, std::abs(a))); }
      }
}

TEST(Curvature, Limits) {
  EXPECT_NEAR(nvac_total_curvature(3, Kinematics(0.0).at(1e-6)), 8.0, 1e-8);
  EXPECT_NEAR(nvac_total_curvature(2, Kinematics(0.0).at(10.0)), 16.0 / (pi * pi), 1e-6);
  EXPECT_EQ(nvac_total_curvature(1, Kinematics(0.0).at(1.0)), 0.0);
}

TEST(Curvature, PhotonsMatchRateIntegral) {
  const std::vector<double> grid{0.2, 0.5, 1.0};
  for (double gamma : {0.0, 1.3}) {
    const auto a = vacuum_photons_from_curvature(3, gamma, grid);
    const auto b = vacuum_spectrum(3, gamma, grid, 3).photons;
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8 * std::max(1.0, b[i]));
  }
}

TEST(PrincipalMode, ElliptcFormsP2) {
  EXPECT_NEAR(n1_vacuum_p2(Kinematics(0.0).at(0.0)), 0.0, 1e-15);
  const double tau = 5.0;
  EXPECT_NEAR(n1_vacuum_p2(Kinematics(0.0).at(2 * tau)), 8.0 * tau / (pi * pi) + 4.0 * std::log(2.0) / (pi * pi) - 0.5, 1e-6);
  const double h = 1e-5;
  for (double gamma : {0.0, 0.6})
    for (double t : {0.2, 0.9}) {
      const Kinematics k(gamma);
      const double d = (n1_vacuum_p2(k.at(2 * (t + h))) - n1_vacuum_p2(k.at(2 * (t - h)))) / (2 * h);
      const KinPoint kin = k.at(2 * t);
      EXPECT_NEAR(rate1_elliptic_p2(kin), vacuum_rate(2, 1, 0, kin), 1e-10);
      if (gamma == 0.0) { EXPECT_NEAR(d, vacuum_rate(2, 1, 0, kin), 1e-6 * std::abs(d)); }
    }
}

TEST(PrincipalMode, EllipticDerivativeRules) {
  const double h = 1e-5;
  for (double k : {0.2, 0.5, 0.9}) {
    const double K = specfun::elliptic_K(k), E = specfun::elliptic_E(k), kp2 = 1 - k * k;
    const double dK = (specfun::elliptic_K(k + h) - specfun::elliptic_K(k - h)) / (2 * h);
    const double dE = (specfun::elliptic_E(k + h) - specfun::elliptic_E(k - h)) / (2 * h);
    EXPECT_NEAR(dK, (E - kp2 * K) / (k * kp2), 1e-6);
    EXPECT_NEAR(dE, (E - K) / k, 1e-6);
  }
}

TEST(Rates, RouteAgreement) {
  for (int p : {2, 3, 5})
    for (double gamma : {0.0, 0.8, 1.0, 1.4}) {
      const KinPoint kin = Kinematics(gamma).at(p * 0.6);
      const auto fft = vacuum_rates_fft(p, kin, 6);
      for (long m = 1; m <= p * 7; ++m) {
        const double c = vacuum_rate_coefficients(p, m, kin);
        const double h = vacuum_rate(p, static_cast<int>(m % p), m / p, kin);
        EXPECT_NEAR(c, h, 1e-10 * std::max(1.0, std::abs(c)));
        EXPECT_NEAR(fft[m - 1], h, 1e-10 * std::max(1.0, std::abs(c)));
        if (m % p == 0) { EXPECT_EQ(h, 0.0); }
      }
    }
}

TEST(Rates, PlateauAndSuppression) {
  // a p tau = 4
  const KinPoint kin = Kinematics(0.0).at(4.0);
  EXPECT_NEAR(vacuum_rate(2, 1, 0, kin) / vacuum_rate_plateau(2, 1, 0, 0.0), 1.0, 0.01);
  const KinPoint k1 = Kinematics(0.0).at(2.0);
  const long q = std::lround(2.0 * k1.S * k1.S);
  const double r = vacuum_rate(2, 1, q, k1) / vacuum_rate_plateau(2, 1, q, 0.0);
  EXPECT_GT(r, 0.5 * std::exp(-2.0));
  EXPECT_LT(r, 2.0 * std::exp(-2.0));
}

TEST(Rates, TotalMatchesModeSum) {
  const KinPoint kin = Kinematics(0.5).at(3 * 0.4);
  const auto fft = vacuum_rates_fft(3, kin, vacuum_q_max(kin));
  double s = 0.0;
  for (double r : fft) s += r;
  EXPECT_NEAR(vacuum_rate_total(3, kin), s, 1e-9 * std::abs(s));
}

TEST(CavityRate, StateDependence) {
  EXPECT_EQ(cavity_rate_asymptotic(2, 0.0, InitialState::vacuum()), 0.0);
  const double r1 = cavity_rate_asymptotic(3, 0.2, InitialState::thermal(1.0, 50));
  const double r2 = cavity_rate_asymptotic(3, 0.2, InitialState::thermal(2.0, 50));
  EXPECT_NEAR(r2, 2.0 * r1, 1e-12 * std::abs(r1));
  EXPECT_THROW(cavity_rate_asymptotic(2, 1.2, InitialState::vacuum()), regime_error);
}

TEST(CavityRate, FockFiniteDifference) {
  const InitialState s = InitialState::fock({{1, 1.0}});
  const double tau = 2.0, h = 1e-3; // a p tau = 4
  const double d = (n_state_total(2, 0.0, s, tau + h) - n_state_total(2, 0.0, s, tau - h)) / (2 * h);
  const double r = cavity_rate_asymptotic(2, 0.0, s);
  EXPECT_NEAR(d / r, 1.0, 0.02);
}

TEST(ModeCount, GrowsLikeSquaredAmplitude) {
  long prev = 0;
  for (double tau : {1.0, 1.5, 2.0}) {
    const KinPoint kin = Kinematics(0.0).at(2 * tau);
    const ModeCount mc = excited_mode_count(kin, 2);
    EXPECT_GT(mc.count, prev);
    prev = mc.count;
    const double ratio = mc.count / (kin.S * kin.S);
    EXPECT_GT(ratio, 0.5) << tau;
    EXPECT_LT(ratio, 1.0) << tau;
  }
  EXPECT_THROW(excited_mode_count(Kinematics(1.5).at(1.0), 2), regime_error);
}

TEST(InitialStates, Invariants) {
  const InitialState f = InitialState::fock({{2, 3.0}, {5, 0.0}});
  EXPECT_NO_THROW(f.validate());
  EXPECT_EQ(f.support(), std::vector<long>{2});
  EXPECT_EQ(initial_energy(f), 6.0);
  EXPECT_THROW(InitialState::fock({{0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(InitialState::fock({{1, -1.0}}), std::invalid_argument);
  const InitialState c = InitialState::coherent(3, cplx(0.0, 2.0));
  EXPECT_EQ(initial_energy(c), 12.0);
  EXPECT_EQ(c.anom(3, 3), cplx(-4.0));
  EXPECT_EQ(g_parameter(6, c), cplx(3.0 * -4.0));
  const InitialState t = InitialState::thermal(2.0, 4);
  EXPECT_NEAR(initial_photons(t), 2.0 * (1 + 0.5 + 1.0 / 3 + 0.25), 1e-15);
  EXPECT_EQ(initial_energy(t), 8.0);
  EXPECT_TRUE(InitialState::thermal(0.0, 4).is_vacuum());
  EXPECT_TRUE(InitialState::vacuum().is_vacuum());
}
