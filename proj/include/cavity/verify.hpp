/**
 * @file verify.hpp
 * @brief Invariant suite behind the `verify` command: cross-route agreement,
 * unitarity, recurrences, energy and photon-number bookkeeping, rate forms,
 * p = 1 cooling and the full-field check.  Each check reports a residual and
 * the tolerance it is held to.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cavity/analytic.hpp"
#include "cavity/full_field.hpp"
#include "cavity/observables.hpp"
#include "cavity/reduced.hpp"

namespace cavity {

/// Compact number text for check names.
inline std::string io_tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

struct CheckResult {
  std::string name;
  double value = 0.0;     // residual (or relative error)
  double tolerance = 0.0;
  bool passed = false;
};

namespace detail {

inline CheckResult make_check(std::string name, double value, double tol) {
  return {std::move(name), value, tol, std::isfinite(value) && value <= tol};
}

inline double max_table_diff(const CoefficientTable& a, const CoefficientTable& b, long n_max, long m_max) {
  double d = 0.0;
  for (long n = 1; n <= n_max; ++n)
    for (long m = -m_max; m <= m_max; ++m)
      if (m != 0) d = std::max(d, std::abs(a(n, m) - b(n, m)));
  return d;
}

} // namespace detail

inline std::vector<CheckResult> verify_routes(int p, double gamma, double tau, unsigned threads) {
  std::vector<CheckResult> out;
  const std::string tag = "p=" + std::to_string(p) + ",gamma=" + io_tag(gamma) + ",tau=" + io_tag(tau);
  const long N = 10;
  const CoefficientTable closed = build_table(p, gamma, tau, N, N, TableMethod::closed_form, threads);
  const CoefficientTable fft = build_table(p, gamma, tau, N, N, TableMethod::fft, threads);
  const ReducedTable red = integrate_reduced(p, gamma, tau, N, N, kReducedTolerance, threads);
  out.push_back(detail::make_check("routes.reduced_vs_closed[" + tag + "]", detail::max_table_diff(closed, red.table, N, N), 1e-7));
  out.push_back(detail::make_check("routes.fft_vs_closed[" + tag + "]", detail::max_table_diff(closed, fft, N, N), 1e-10));
  const KinPoint kin = Kinematics(gamma).at(p * tau);
  double dc = 0.0;
  for (long n = 1; n <= 6; ++n)
    for (long m = -6; m <= 6; ++m) {
      if (m == 0) continue;
      const SubsetIndex s = decompose(p, n);
      const auto k = lower_index(p, s.j, m);
      if (!k) continue;
      dc = std::max(dc, std::abs(contour_oracle(p, s.j, s.q, *k, kin) - closed(n, m)));
    }
  out.push_back(detail::make_check("routes.contour_vs_closed[" + tag + "]", dc, 1e-8));
  return out;
}

inline std::vector<CheckResult> verify_unitarity(int p, double gamma, double tau, unsigned threads) {
  const std::string tag = "p=" + std::to_string(p) + ",gamma=" + io_tag(gamma) + ",tau=" + io_tag(tau);
  const UnitarityReport r = unitarity_residuals(p, Kinematics(gamma).at(p * tau), 6, 6, threads);
  return {detail::make_check("unitarity.rows[" + tag + "]", r.rows, 1e-6),
          detail::make_check("unitarity.columns[" + tag + "]", r.columns, 1e-6),
          detail::make_check("unitarity.cross[" + tag + "]", r.cross, 1e-6)};
}

inline std::vector<CheckResult> verify_recurrences(int p, double gamma, double tau, unsigned threads) {
  const std::string tag = "p=" + std::to_string(p) + ",gamma=" + io_tag(gamma) + ",tau=" + io_tag(tau);
  const double h = 1e-5;
  const long n_check = 6, m_check = 6;
  const long n_tab = n_check + p;
  const auto a = build_table(p, gamma, tau - h, n_tab, m_check, TableMethod::closed_form, threads);
  const auto b = build_table(p, gamma, tau, n_tab, m_check, TableMethod::closed_form, threads);
  const auto c = build_table(p, gamma, tau + h, n_tab, m_check, TableMethod::closed_form, threads);
  const RecurrenceReport r = check_recurrences(a, b, c, h, n_check, m_check);
  std::vector<CheckResult> out{detail::make_check("recurrence.generic[" + tag + "]", r.generic, 1e-5),
                               detail::make_check("recurrence.top[" + tag + "]", r.top, 1e-5)};
  if (p > 1) out.push_back(detail::make_check("recurrence.low[" + tag + "]", r.low, 1e-5));
  return out;
}

/// Spectrum-summed energy against the closed form.
inline CheckResult verify_energy(int p, double gamma, const InitialState& s, double tau, const std::string& label) {
  const ObservableSeries obs = observable_series(p, gamma, s, {tau}, 4);
  const double closed = obs.energy_closed[0];
  const double rel = std::abs(obs.energy_sum[0] - closed) / std::max(1e-300, std::abs(closed));
  return detail::make_check("energy.spectrum_vs_closed[" + label + ",p=" + std::to_string(p) + ",gamma=" + io_tag(gamma) +
                                ",tau=" + io_tag(tau) + "]",
                            rel, 1e-5);
}

/// Second derivative of the spectrum-summed energy against the energy equation.
inline CheckResult verify_energy_ode(int p, double gamma, const InitialState& s, double tau, const std::string& label) {
  const double h = 1e-3;
  const ObservableSeries obs = observable_series(p, gamma, s, {tau - h, tau, tau + h}, 1);
  const double res = energy_ode_residual(p, gamma, s, obs.energy_sum[0], obs.energy_sum[1], obs.energy_sum[2], h);
  const double scale = std::max(1.0, std::abs(energy_ode_rhs(p, gamma, s, obs.energy_sum[1])));
  return detail::make_check("energy.ode_residual[" + label + ",p=" + std::to_string(p) + ",gamma=" + io_tag(gamma) + "]",
                            std::abs(res) / scale, 1e-4);
}

/// Total vacuum rate against a central difference of the directly summed
/// vacuum occupations.
inline CheckResult verify_photon_rate(int p, double gamma, double tau) {
  const double h = 1e-4;
  const Kinematics kin(gamma);
  auto total = [&](double t) {
    const KinPoint k = kin.at(p * t);
    const long M = p * (subset_reach(1, k.kappa, -46.0) + 1);
    double acc = 0.0;
    for (long m = 1; m <= M; ++m) acc += vacuum_occupation_direct(p, k, m);
    return acc;
  };
  const double fd = (total(tau + h) - total(tau - h)) / (2.0 * h);
  const double rate = vacuum_rate_total(p, kin.at(p * tau));
  return detail::make_check("photons.rate_vs_difference[p=" + std::to_string(p) + ",gamma=" + io_tag(gamma) + "]",
                            std::abs(fd - rate) / std::max(1e-300, std::abs(rate)), 1e-5);
}

inline std::vector<CheckResult> verify_rate_forms() {
  double curv = 0.0, ell = 0.0, first = 0.0, zero = 0.0;
  for (double gamma : {0.0, 0.5, 1.0, 1.5})
    for (double tau : {0.1, 0.5, 1.0}) {
      for (int p = 2; p <= 3; ++p) {
        const KinPoint kin = Kinematics(gamma).at(p * tau);
        const double c = nvac_total_curvature(p, kin);
        curv = std::max(curv, std::abs(c - nvac_total_curvature_coefficients(p, kin)));
        if (p == 2) {
          curv = std::max(curv, std::abs(c - nvac_curvature_elliptic_p2(kin)));
          ell = std::max(ell, std::abs(vacuum_rate(2, 1, 0, kin) - rate1_elliptic_p2(kin)));
        }
        for (long m = 1; m <= 12; ++m) {
          const double r = vacuum_rate_coefficients(p, m, kin);
          if (m % p == 0) zero = std::max(zero, std::abs(r) + std::abs(vacuum_rate(p, 0, m / p, kin)));
          else first = std::max(first, std::abs(r - vacuum_rate(p, static_cast<int>(m % p), m / p, kin)));
        }
      }
    }
  return {detail::make_check("curvature.forms_agree", curv, 1e-10),
          detail::make_check("rates.principal_elliptic", ell, 1e-10),
          detail::make_check("rates.coefficient_form", first, 1e-10),
          detail::make_check("rates.zero_modes", zero, 0.0)};
}

/// p = 1 thermal state: per-mode energies T(1 - kappa^{2m}) and conservation
/// of the total photon number.
inline std::vector<CheckResult> verify_cooling(double T, double tau) {
  const InitialState s = InitialState::thermal(T, 256);
  const ObservableSeries obs = observable_series(1, 0.0, s, {0.0, tau, 2.0}, 20);
  const double kap = Kinematics(0.0).at(tau).kappa;
  double de = 0.0;
  for (long m = 1; m <= 20; ++m)
    de = std::max(de, std::abs(m * obs.occupation[1][m - 1] - T * (1.0 - std::pow(kap, 2.0 * m))));
  double drift = 0.0;
  for (double n : obs.n_cav) drift = std::max(drift, std::abs(n - initial_photons(s)));
  return {detail::make_check("cooling.mode_energy[T=" + io_tag(T) + ",tau=" + io_tag(tau) + "]", de, 1e-8),
          detail::make_check("cooling.photon_conservation[T=" + io_tag(T) + "]", drift, 1e-6)};
}

/// Full-field integration against the closed-form moduli of xi_1^{(1)}, eta_1^{(1)}.
inline std::vector<CheckResult> verify_full_field(double epsilon, double tau) {
  FullFieldConfig cfg;
  cfg.p = 2;
  cfg.gamma = 0.0;
  cfg.epsilon = epsilon;
  cfg.K = 16;
  FullFieldState st = full_initial_state(cfg, 1);
  const long k = std::lround(2.0 * tau / epsilon * cfg.wall_frequency() / std::numbers::pi);
  integrate_full(cfg, st, cfg.wall_mean_crossing(k));
  const Projection pr = project_bogoliubov(cfg, st);
  const KinPoint kin = Kinematics(0.0).at(2.0 * cfg.tau_of(st.t));
  const double xi = std::abs(rho_generic(2, 1, 1, kin)), eta = std::abs(rho_generic(2, 1, -1, kin));
  const double err = std::max(std::abs(std::abs(pr.xi[0]) / xi - 1.0), std::abs(std::abs(pr.eta[0]) / eta - 1.0));
  const std::string tag = "[eps=" + io_tag(epsilon) + ",tau=" + io_tag(tau) + "]";
  return {detail::make_check("full_field.modulus_error" + tag, err, 10.0 * epsilon),
          detail::make_check("full_field.projection_norm" + tag, std::abs(projection_norm(pr, 1) - 1.0), 1e-6)};
}

/// The default suite.  Runs in well under a minute on one core.
inline std::vector<CheckResult> verify_suite(unsigned threads = thread_count()) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  for (int p = 1; p <= 3; ++p) {
    append(verify_routes(p, 0.5, 0.5, threads));
    append(verify_unitarity(p, 0.5, 0.5, threads));
    append(verify_recurrences(p, 0.5, 0.5, threads));
  }
  append(verify_routes(2, 1.5, 0.5, threads));
  append(verify_unitarity(2, 1.5, 0.5, threads));
  out.push_back(verify_energy(3, 0.5, InitialState::vacuum(), 1.0, "vacuum"));
  out.push_back(verify_energy(2, 0.0, InitialState::coherent(1, std::polar(3.0, 0.7)), 1.0, "coherent"));
  out.push_back(verify_energy(1, 0.5, InitialState::coherent(2, std::polar(1.5, 0.3)), 1.0, "coherent"));
  out.push_back(verify_energy_ode(2, 0.5, InitialState::thermal(10.0, 256), 0.5, "thermal"));
  out.push_back(verify_photon_rate(2, 0.5, 0.3));
  out.push_back(verify_photon_rate(3, 0.0, 0.3));
  append(verify_rate_forms());
  append(verify_cooling(5.0, 1.0));
  append(verify_full_field(1e-3, 0.25));
  return out;
}

} // namespace cavity
