/**
 * @file reduced.hpp
 * @brief Numerical integration of the slow-time mode-coupling equations
 *
 *   d rho_m / d tau = sigma [(m + p) rho_{m+p} - (m - p) rho_{m-p}] + 2 i gamma m rho_m
 *
 * with rho_0 = 0 and rho_m^{(n)}(0) = delta_{mn}.  Each upper index n evolves
 * inside its own subset m = j + p k on a truncated box of k.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cavity/analytic.hpp"
#include "cavity/core_params.hpp"
#include "cavity/errors.hpp"
#include "cavity/parallel.hpp"

namespace cavity {

inline constexpr double kReducedTolerance = 1e-9;
inline constexpr int kReducedMaxHalvings = 12;
inline constexpr double kBoundaryLimit = 1e-8;
// h * (coupling bound) kept below this value; RK4 is stable on the imaginary
// axis up to 2.8.
inline constexpr double kStabilityNumber = 1.5;

/// Largest |kappa(x)| for x in [0, x_end].
inline double kappa_max(double gamma, double x_end) {
  const Kinematics kin(gamma);
  if (kin.regime() == Regime::above && kin.a_tilde() * x_end >= std::numbers::pi / 2) return 1.0 / std::abs(gamma);
  return std::abs(kin.at(x_end).kappa);
}

/// First guess for the subset cutoff K (k in [-K, K]) from the geometric
/// decay |kappa|^k / k.  Rows anchored at large q spread further than this, so
/// integrate_reduced enlarges the box whenever the edge monitor trips.
inline long reduced_cutoff(double gamma, double x_end, long k_needed) {
  const double km = kappa_max(gamma, x_end);
  long K = k_needed + 16;
  if (km <= 0.0) return K;
  const double lk = std::log(km);
  while (lk * (K - k_needed) - std::log(static_cast<double>(K)) > std::log(0.1 * kBoundaryLimit))
    K = K + K / 8 + 1;
  return K;
}

inline constexpr int kMaxBoxGrowth = 8;

struct ReducedRun {
  long kmin = 0;
  long kmax = 0;
  std::vector<cplx> y;             // y_k for k = kmin..kmax
  double boundary_amplitude = 0.0; // largest |y| seen at the box edges
  long steps = 0;
  int halvings = 0;

  cplx at(long k) const { return (k < kmin || k > kmax) ? cplx(0.0) : y[k - kmin]; }
};

namespace detail {

struct SubsetOperator {
  int p;
  int j;
  int sigma;
  double gamma;
  long kmin;
  long kmax;

  void apply(const std::vector<cplx>& y, std::vector<cplx>& dy) const {
    const long n = kmax - kmin + 1;
    for (long i = 0; i < n; ++i) {
      const double m = static_cast<double>(j + p * (kmin + i));
      const cplx up = (i + 1 < n) ? y[i + 1] : cplx(0.0);
      const cplx down = (i > 0) ? y[i - 1] : cplx(0.0);
      dy[i] = static_cast<double>(sigma) * ((m + p) * up - (m - p) * down) + cplx(0.0, 2.0 * gamma * m) * y[i];
    }
  }

  double norm_bound() const {
    const double mmax = static_cast<double>(std::max(std::abs(j + p * kmin), std::abs(j + p * kmax)));
    return 2.0 * (mmax + p) * (1.0 + std::abs(gamma));
  }
};

// Integrates with a fixed step; edge_max tracks |y| on the truncated edges of
// the box (the lower edge of the j = 0 subset is physical, not a truncation).
inline std::vector<cplx> rk4_run(const SubsetOperator& op, std::vector<cplx> y, double tau_end, long steps,
                                 double& edge_max) {
  const std::size_t n = y.size();
  std::vector<cplx> k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double h = tau_end / steps;
  const bool lower_open = op.j != 0;
  auto edges = [&] { return std::max(lower_open ? std::abs(y.front()) : 0.0, std::abs(y.back())); };
  edge_max = 0.0;
  for (long s = 0; s < steps; ++s) {
    op.apply(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    op.apply(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    op.apply(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    op.apply(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    edge_max = std::max(edge_max, edges());
  }
  return y;
}

} // namespace detail

/**
 * Integrates one upper index n = j + p q to tau_end on the box k in [-K, K]
 * (k >= 1 for the j = 0 subset).  The step count doubles until two successive
 * runs agree to tol.
 */
inline ReducedRun integrate_subset(int p, double gamma, int j, long q, double tau_end, long K,
                                   double tol = kReducedTolerance) {
  if (tau_end < 0.0) throw std::invalid_argument("integrate_subset: tau_end must be nonnegative");
  ReducedRun run;
  run.kmin = (j == 0) ? 1 : -K;
  run.kmax = K;
  if (q < run.kmin || q > run.kmax) throw std::invalid_argument("integrate_subset: box does not contain the initial mode");
  const detail::SubsetOperator op{p, j, sigma_of(p), gamma, run.kmin, run.kmax};
  std::vector<cplx> y0(static_cast<std::size_t>(run.kmax - run.kmin + 1));
  y0[q - run.kmin] = 1.0;
  if (tau_end == 0.0) {
    run.y = y0;
    return run;
  }
  long steps = std::max<long>(4, static_cast<long>(std::ceil(tau_end * op.norm_bound() / kStabilityNumber)));
  double edge = 0.0;
  std::vector<cplx> coarse = detail::rk4_run(op, y0, tau_end, steps, edge);
  for (int h = 1; h <= kReducedMaxHalvings; ++h) {
    steps *= 2;
    std::vector<cplx> fine = detail::rk4_run(op, y0, tau_end, steps, edge);
    double diff = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) diff = std::max(diff, std::abs(fine[i] - coarse[i]));
    if (diff < tol) {
      run.y = std::move(fine);
      run.steps = steps;
      run.halvings = h;
      run.boundary_amplitude = edge;
      return run;
    }
    coarse = std::move(fine);
  }
  throw numeric_error("integrate_subset: step halving did not reach tolerance");
}

struct ReducedTable {
  CoefficientTable table;
  double boundary_amplitude = 0.0;
};

/// Numerical counterpart of build_table: integrates every upper index
/// n = 1..n_max (concurrently) and records rho_m^{(n)} for |m| <= m_max.
/// Each box is enlarged until its edge amplitude stays below kBoundaryLimit.
inline ReducedTable integrate_reduced(int p, double gamma, double tau_end, long n_max, long m_max,
                                      double tol = kReducedTolerance, unsigned threads = thread_count()) {
  ReducedTable out{CoefficientTable(p, gamma, tau_end, n_max, m_max), 0.0};
  std::vector<double> edges(static_cast<std::size_t>(n_max), 0.0);
  const long k_needed = std::max(n_max, m_max) / p + 2;
  const long K = reduced_cutoff(gamma, p * tau_end, k_needed);
  parallel_for(
      static_cast<std::size_t>(n_max),
      [&](std::size_t row) {
        const long n = static_cast<long>(row) + 1;
        const SubsetIndex s = decompose(p, n);
        long box = std::max(K, s.q + 16);
        ReducedRun run = integrate_subset(p, gamma, s.j, s.q, tau_end, box, tol);
        for (int g = 0; g < kMaxBoxGrowth && run.boundary_amplitude > kBoundaryLimit; ++g) {
          box += box / 2;
          run = integrate_subset(p, gamma, s.j, s.q, tau_end, box, tol);
        }
        for (long k = run.kmin; k <= run.kmax; ++k) {
          const long m = s.j + p * k;
          if (m == 0 || std::abs(m) > m_max) continue;
          out.table.at(n, m) = run.at(k);
        }
        edges[row] = run.boundary_amplitude;
      },
      threads);
  for (double e : edges) out.boundary_amplitude = std::max(out.boundary_amplitude, e);
  return out;
}

/// Largest residual of each upper-index recurrence, from central differences
/// of tables at tau - h, tau, tau + h.
struct RecurrenceReport {
  double generic = 0.0; // n > p
  double low = 0.0;     // n = 1..p-1
  double top = 0.0;     // n = p
};

inline RecurrenceReport check_recurrences(const CoefficientTable& minus, const CoefficientTable& mid,
                                          const CoefficientTable& plus, double h, long n_check, long m_check) {
  const int p = mid.p;
  const int sigma = sigma_of(p);
  const double gamma = mid.gamma;
  RecurrenceReport rep;
  for (long n = 1; n <= n_check; ++n) {
    for (long m = -m_check; m <= m_check; ++m) {
      if (m == 0) continue;
      const cplx d = (plus(n, m) - minus(n, m)) / (2.0 * h);
      const cplx drift = cplx(0.0, 2.0 * gamma) * mid(n, m);
      if (n > p) {
        const cplx rhs = static_cast<double>(n) * (static_cast<double>(sigma) * (mid(n - p, m) - mid(n + p, m)) + drift);
        rep.generic = std::max(rep.generic, std::abs(d - rhs));
      } else if (n < p) {
        const cplx rhs =
            static_cast<double>(n) * (static_cast<double>(sigma) * (std::conj(mid(p - n, -m)) - mid(n + p, m)) + drift);
        rep.low = std::max(rep.low, std::abs(d - rhs));
      } else if (m >= 1) {
        const cplx rhs = static_cast<double>(p) * (-static_cast<double>(sigma) * mid(2 * p, m) + drift);
        rep.top = std::max(rep.top, std::abs(d - rhs));
      }
    }
  }
  return rep;
}

} // namespace cavity
