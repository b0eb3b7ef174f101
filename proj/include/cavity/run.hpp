/**
 * @file run.hpp
 * @brief Command implementations shared by the CLI and the tests: each command
 * turns a resolved Config into one result Series.
 */
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cavity/analytic.hpp"
#include "cavity/full_field.hpp"
#include "cavity/io.hpp"
#include "cavity/observables.hpp"
#include "cavity/parallel.hpp"
#include "cavity/reduced.hpp"
#include "cavity/verify.hpp"

namespace cavity {

struct RunResult {
  io::Series series;
  std::vector<std::string> warnings; // truncation warnings (errors under --strict)
  std::string failure;               // nonempty: numeric tolerance failure
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"coeffs", "spectrum", "energy", "rates", "integrate", "verify", "sweep"};
  return names;
}

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline long positive(const io::Config& cfg, const std::string& key) {
  const long v = cfg.integer(key);
  if (v < 1) throw io::ConfigError(key + ": must be positive");
  return v;
}

inline TableMethod table_method(const io::Config& cfg) {
  const std::string& m = cfg.str("run.method");
  if (m == "closed_form") return TableMethod::closed_form;
  if (m == "fft") return TableMethod::fft;
  throw io::ConfigError("run.method: expected closed_form or fft");
}

inline RunResult run_coeffs(const io::Config& cfg) {
  const ResonanceConfig rc = cfg.resonance();
  const auto grid = io::parse_tau_grid(cfg.str("run.tau"));
  const long N = positive(cfg, "run.upper"), M = positive(cfg, "run.modes");
  const TableMethod method = table_method(cfg);
  RunResult r;
  r.series.columns = {"tau", "n", "m", "re", "im", "abs"};
  for (double tau : grid) {
    const CoefficientTable t = build_table(rc.p, rc.gamma, tau, N, M, method);
    for (long n = 1; n <= N; ++n)
      for (long m = -M; m <= M; ++m) {
        if (m == 0 || (n - m) % rc.p != 0) continue;
        const cplx v = t(n, m);
        r.series.add({tau, double(n), double(m), v.real(), v.imag(), std::abs(v)});
      }
  }
  return r;
}

inline ObservableSeries observables_for(const io::Config& cfg, long m_max) {
  const ResonanceConfig rc = cfg.resonance();
  const auto grid = io::parse_tau_grid(cfg.str("run.tau"));
  const InitialState s = io::parse_state(cfg.str("run.state"));
  const long rows = cfg.integer("truncation.rows");
  if (rows < 0) throw io::ConfigError("truncation.rows: must be nonnegative");
  return observable_series(rc.p, rc.gamma, s, grid, m_max, rows);
}

inline void tail_warnings(const ObservableSeries& obs, RunResult& r) {
  for (std::size_t i = 0; i < obs.tau.size(); ++i)
    if (obs.tail[i] > 1e-6)
      r.warnings.push_back("truncation: row normalisation deficit " + io::format_double(obs.tail[i]) + " at tau = " +
                           io::format_double(obs.tau[i]));
}

inline RunResult run_spectrum(const io::Config& cfg) {
  const long M = positive(cfg, "run.modes");
  const ObservableSeries obs = observables_for(cfg, M);
  RunResult r;
  r.series.columns = {"tau", "mode", "N_m", "N_m_vac", "E_m", "rate_vac"};
  for (std::size_t i = 0; i < obs.tau.size(); ++i)
    for (long m = 1; m <= M; ++m) {
      const double n = obs.occupation[i][m - 1];
      r.series.add({obs.tau[i], double(m), n, obs.vacuum_occupation[i][m - 1], m * n, obs.vacuum_rate[i][m - 1]});
    }
  tail_warnings(obs, r);
  return r;
}

inline RunResult run_energy(const io::Config& cfg) {
  const ResonanceConfig rc = cfg.resonance();
  const ObservableSeries obs = observables_for(cfg, 1);
  RunResult r;
  r.series.columns = {"tau", "E_total_closed", "E_total_sum", "E_vac_closed", "N_vac", "N_cav", "N_total", "G_re", "G_im"};
  for (std::size_t i = 0; i < obs.tau.size(); ++i)
    r.series.add({obs.tau[i], obs.energy_closed[i], obs.energy_sum[i], vacuum_energy(rc.p, rc.gamma, obs.tau[i]), obs.n_vac[i],
                  obs.n_cav[i], obs.n_vac[i] + obs.n_cav[i], obs.G.real(), obs.G.imag()});
  tail_warnings(obs, r);
  return r;
}

inline RunResult run_rates(const io::Config& cfg) {
  const ResonanceConfig rc = cfg.resonance();
  const auto grid = io::parse_tau_grid(cfg.str("run.tau"));
  const long M = positive(cfg, "run.modes");
  const bool below = regime_of(rc.gamma) == Regime::below;
  RunResult r;
  r.series.columns = {"tau", "mode", "j", "q", "rate_vac", "rate_coeff", "plateau"};
  for (double tau : grid) {
    const KinPoint kin = Kinematics(rc.gamma).at(rc.p * tau);
    for (long m = 1; m <= M; ++m) {
      const int j = static_cast<int>(m % rc.p);
      const long q = m / rc.p;
      r.series.add({tau, double(m), double(j), double(q), vacuum_rate(rc.p, j, q, kin), vacuum_rate_coefficients(rc.p, m, kin),
                    below ? vacuum_rate_plateau(rc.p, j, q, rc.gamma) : nan()});
    }
  }
  return r;
}

inline RunResult run_integrate(const io::Config& cfg) {
  const ResonanceConfig rc = cfg.resonance();
  const auto grid = io::parse_tau_grid(cfg.str("run.tau"));
  const long N = positive(cfg, "run.upper"), M = positive(cfg, "run.modes");
  const double tol = cfg.real("numeric.tolerance");
  const double red_tol = cfg.real("numeric.reduced_tolerance");
  RunResult r;
  r.series.columns = {"tau", "route", "n", "m", "num_re", "num_im", "closed_re", "closed_im", "abs_err"};
  double worst = 0.0;
  for (double tau : grid) {
    const ReducedTable red = integrate_reduced(rc.p, rc.gamma, tau, N, M, red_tol);
    if (red.boundary_amplitude > kBoundaryLimit)
      r.warnings.push_back("truncation: reduced box edge reached " + io::format_double(red.boundary_amplitude) + " at tau = " +
                           io::format_double(tau));
    const CoefficientTable closed = build_table(rc.p, rc.gamma, tau, N, M);
    for (long n = 1; n <= N; ++n)
      for (long m = -M; m <= M; ++m) {
        if (m == 0 || (n - m) % rc.p != 0) continue;
        const cplx a = red.table(n, m), b = closed(n, m);
        const double err = std::abs(a - b);
        worst = std::max(worst, err);
        r.series.add({tau, std::string("reduced"), double(n), double(m), a.real(), a.imag(), b.real(), b.imag(), err});
      }
  }
  if (worst > tol) r.failure = "reduced vs closed-form coefficients differ by " + io::format_double(worst);

  if (cfg.integer("full.enable") != 0) {
    FullFieldConfig fc;
    fc.p = rc.p;
    fc.gamma = rc.gamma;
    fc.epsilon = rc.epsilon;
    fc.K = static_cast<int>(positive(cfg, "full.K"));
    fc.steps_per_period = static_cast<int>(positive(cfg, "full.steps_per_period"));
    if (fc.steps_per_period < 200) throw io::ConfigError("full.steps_per_period: at least 200 required");
    double worst_rel = 0.0;
    const long n_full = std::min<long>(N, fc.K);
    for (long n = 1; n <= n_full; ++n) {
      FullFieldState st = full_initial_state(fc, static_cast<int>(n));
      for (double tau : grid) {
        const long k = std::lround(2.0 * tau / fc.epsilon * fc.wall_frequency() / std::numbers::pi);
        const double t = fc.wall_mean_crossing(k);
        if (t < st.t) continue;
        integrate_full(fc, st, t);
        const Projection pr = project_bogoliubov(fc, st);
        const double tau_c = fc.tau_of(t);
        const KinPoint kin = Kinematics(rc.gamma).at(rc.p * tau_c);
        for (long m = -std::min<long>(M, fc.K); m <= std::min<long>(M, fc.K); ++m) {
          if (m == 0 || (n - m) % rc.p != 0) continue;
          // rho_m = xi_m for m > 0 and -eta_{|m|} for m < 0; phases are
          // convention dependent, so the error column compares moduli.
          const cplx a = (m > 0) ? pr.xi[m - 1] : -pr.eta[-m - 1];
          const cplx b = rho_generic(rc.p, n, m, kin);
          const double err = std::abs(std::abs(a) - std::abs(b));
          if (n == 1 && std::abs(m) == 1 && std::abs(b) > 0.0) worst_rel = std::max(worst_rel, err / std::abs(b));
          r.series.add({tau_c, std::string("full"), double(n), double(m), a.real(), a.imag(), b.real(), b.imag(), err});
        }
      }
    }
    if (worst_rel > 10.0 * rc.epsilon && r.failure.empty())
      r.failure = "full-field moduli differ from the closed form by " + io::format_double(worst_rel) + " (relative)";
  }
  return r;
}

inline RunResult run_verify(const io::Config&) {
  RunResult r;
  r.series.columns = {"check", "value", "tolerance", "passed"};
  long failed = 0;
  for (const CheckResult& c : verify_suite()) {
    r.series.add({c.name, c.value, c.tolerance, c.passed ? 1.0 : 0.0});
    if (!c.passed) ++failed;
  }
  if (failed > 0) r.failure = std::to_string(failed) + " invariant check(s) failed";
  return r;
}

inline RunResult run_sweep(const io::Config& cfg) {
  const auto grid = io::parse_tau_grid(cfg.str("run.tau"));
  const auto ps = io::parse_grid("sweep.p", cfg.str("sweep.p"));
  const auto gammas = io::parse_grid("sweep.gamma", cfg.str("sweep.gamma"));
  const InitialState s = io::parse_state(cfg.str("run.state"));
  struct Point {
    int p;
    double gamma;
  };
  std::vector<Point> points;
  for (double pv : ps) {
    if (pv < 1 || pv != std::floor(pv)) throw io::ConfigError("sweep.p: entries must be positive integers");
    for (double g : gammas) {
      if (g < 0.0) throw io::ConfigError("sweep.gamma: entries must be nonnegative");
      points.push_back({static_cast<int>(pv), g});
    }
  }
  // One block of rows per (p, gamma), filled concurrently, emitted in grid order.
  std::vector<std::vector<std::vector<io::Cell>>> blocks(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const Point pt = points[i];
    const Kinematics kin(pt.gamma);
    const std::vector<double> n_vac =
        pt.p >= 2 ? vacuum_photons_from_curvature(pt.p, pt.gamma, grid) : std::vector<double>(grid.size(), 0.0);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const KinPoint k = kin.at(pt.p * grid[t]);
      blocks[i].push_back({double(pt.p), pt.gamma, grid[t], std::string(to_string(regime_of(pt.gamma))), k.S, k.kappa,
                           vacuum_energy(pt.p, pt.gamma, grid[t]), total_energy(pt.p, pt.gamma, s, grid[t]), n_vac[t],
                           pt.p >= 2 ? nvac_total_curvature(pt.p, k) : 0.0, pt.p >= 2 ? vacuum_rate(pt.p, 1, 0, k) : 0.0});
    }
  });
  RunResult r;
  r.series.columns = {"p", "gamma", "tau", "regime", "S", "kappa", "E_vac", "E_total", "N_vac", "N_vac_curvature", "rate_1"};
  for (auto& b : blocks)
    for (auto& row : b) r.series.add(std::move(row));
  return r;
}

} // namespace detail

/// Runs one command on a resolved config.
inline RunResult run_command(const std::string& command, const io::Config& cfg) {
  if (command == "coeffs") return detail::run_coeffs(cfg);
  if (command == "spectrum") return detail::run_spectrum(cfg);
  if (command == "energy") return detail::run_energy(cfg);
  if (command == "rates") return detail::run_rates(cfg);
  if (command == "integrate") return detail::run_integrate(cfg);
  if (command == "verify") return detail::run_verify(cfg);
  if (command == "sweep") return detail::run_sweep(cfg);
  throw io::ConfigError("unknown command '" + command + "'");
}

} // namespace cavity
