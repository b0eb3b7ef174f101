/**
 * @file full_field.hpp
 * @brief Instantaneous-basis mode equations of the cavity with a vibrating
 * right wall, integrated on the fast time scale.
 *
 * Units: omega_1 = 1, L0 = pi.  The wall follows
 * L(t) = L0 (1 + eps sin(p (1 + delta) t)) with delta = gamma eps, and
 *
 *   Q_k'' + omega_k(t)^2 Q_k = 2 sum_j g_kj Q_j' + sum_j g_kj' Q_j,
 *   g_kj = (L'/L) (-1)^{k-j} 2 k j / (j^2 - k^2),   omega_k(t) = k pi / L(t),
 *
 * with terms of second order in g dropped.
 */
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cavity/core_params.hpp"
#include "cavity/errors.hpp"

namespace cavity {

inline constexpr double kFullFieldMaxWork = 5e11; // K^2 * steps budget

struct FullFieldConfig {
  int p = 2;
  double gamma = 0.0;
  double epsilon = 1e-3;
  int K = 24;                 // mode cutoff
  int steps_per_period = 200; // per period 2 pi / omega_K

  double delta() const { return gamma * epsilon; }
  double wall_frequency() const { return p * (1.0 + delta()); }
  /// k-th instant at which the wall passes its mean position.
  double wall_mean_crossing(long k) const { return k * std::numbers::pi / wall_frequency(); }
  double tau_of(double t) const { return 0.5 * epsilon * t; }
};

struct FullFieldState {
  double t = 0.0;
  std::vector<cplx> Q;
  std::vector<cplx> P; // dQ/dt
};

/// Q_k(0) = delta_kn, Q_k'(0) = -i omega_n delta_kn.
inline FullFieldState full_initial_state(const FullFieldConfig& cfg, int n) {
  if (n < 1 || n > cfg.K) throw std::invalid_argument("full_initial_state: upper index outside the mode cutoff");
  FullFieldState s;
  s.Q.assign(static_cast<std::size_t>(cfg.K), cplx(0.0));
  s.P.assign(static_cast<std::size_t>(cfg.K), cplx(0.0));
  s.Q[n - 1] = 1.0;
  s.P[n - 1] = cplx(0.0, -static_cast<double>(n));
  return s;
}

namespace detail {

class FullFieldRhs {
 public:
  explicit FullFieldRhs(const FullFieldConfig& cfg) : cfg_(cfg), K_(cfg.K), c_(static_cast<std::size_t>(K_ * K_), 0.0) {
    for (int k = 1; k <= K_; ++k)
      for (int j = 1; j <= K_; ++j) {
        if (j == k) continue;
        const double sgn = ((k - j) % 2 == 0) ? 1.0 : -1.0;
        c_[(k - 1) * K_ + (j - 1)] = sgn * 2.0 * k * j / static_cast<double>(j * j - k * k);
      }
  }

  void operator()(double t, const std::vector<cplx>& Q, const std::vector<cplx>& P, std::vector<cplx>& dQ,
                  std::vector<cplx>& dP, std::vector<cplx>& work) const {
    const double w = cfg_.wall_frequency();
    const double eps = cfg_.epsilon;
    const double s = std::sin(w * t), c = std::cos(w * t);
    const double L_rel = 1.0 + eps * s; // L / L0
    const double r = eps * w * c / L_rel;
    const double acc = -eps * w * w * s / L_rel;
    const double rdot = acc - r * r; // d/dt (L'/L)
    for (int j = 0; j < K_; ++j) work[j] = 2.0 * r * P[j] + rdot * Q[j];
    for (int k = 0; k < K_; ++k) {
      const double omega = (k + 1) / L_rel; // k pi / L with L0 = pi
      cplx sum = 0.0;
      const double* row = &c_[static_cast<std::size_t>(k) * K_];
      for (int j = 0; j < K_; ++j) sum += row[j] * work[j];
      dQ[k] = P[k];
      dP[k] = -omega * omega * Q[k] + sum;
    }
  }

 private:
  FullFieldConfig cfg_;
  int K_;
  std::vector<double> c_;
};

} // namespace detail

/// Advances the state to t_end with classical RK4 at no fewer than
/// steps_per_period steps per period of the highest mode.
inline void integrate_full(const FullFieldConfig& cfg, FullFieldState& state, double t_end) {
  if (cfg.epsilon > 1e-2) throw std::invalid_argument("integrate_full: epsilon must not exceed 1e-2");
  if (t_end < state.t) throw std::invalid_argument("integrate_full: t_end precedes the current time");
  const double span = t_end - state.t;
  if (span == 0.0) return;
  const double omega_max = cfg.K / (1.0 - cfg.epsilon);
  const double h_max = 2.0 * std::numbers::pi / (omega_max * cfg.steps_per_period);
  const long steps = static_cast<long>(std::ceil(span / h_max));
  if (static_cast<double>(steps) * cfg.K * cfg.K > kFullFieldMaxWork)
    throw numeric_error("integrate_full: mode cutoff times step count exceeds the work budget");
  const double h = span / steps;
  const std::size_t K = static_cast<std::size_t>(cfg.K);
  const detail::FullFieldRhs rhs(cfg);
  std::vector<cplx> q1(K), p1(K), q2(K), p2(K), q3(K), p3(K), q4(K), p4(K), tq(K), tp(K), work(K);
  auto& Q = state.Q;
  auto& P = state.P;
  const double t0 = state.t;
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    rhs(t, Q, P, q1, p1, work);
    for (std::size_t i = 0; i < K; ++i) {
      tq[i] = Q[i] + 0.5 * h * q1[i];
      tp[i] = P[i] + 0.5 * h * p1[i];
    }
    rhs(t + 0.5 * h, tq, tp, q2, p2, work);
    for (std::size_t i = 0; i < K; ++i) {
      tq[i] = Q[i] + 0.5 * h * q2[i];
      tp[i] = P[i] + 0.5 * h * p2[i];
    }
    rhs(t + 0.5 * h, tq, tp, q3, p3, work);
    for (std::size_t i = 0; i < K; ++i) {
      tq[i] = Q[i] + h * q3[i];
      tp[i] = P[i] + h * p3[i];
    }
    rhs(t + h, tq, tp, q4, p4, work);
    for (std::size_t i = 0; i < K; ++i) {
      Q[i] += h / 6.0 * (q1[i] + 2.0 * q2[i] + 2.0 * q3[i] + q4[i]);
      P[i] += h / 6.0 * (p1[i] + 2.0 * p2[i] + 2.0 * p3[i] + p4[i]);
    }
  }
  state.t = t_end;
}

struct Projection {
  std::vector<cplx> xi;  // xi_k, k = 1..K
  std::vector<cplx> eta; // eta_k
};

/// Momentum used in the split.  At a wall-mean crossing the wall still moves,
/// and Q' differs from the canonical momentum Q' - sum_j g_kj Q_j by O(eps).
/// The canonical choice keeps sum_m (m/n)(|xi|^2 - |eta|^2) at 1; the velocity
/// choice is the literal free-field formula.
enum class ProjectionMomentum { canonical, velocity };

/// Splits the state into positive- and negative-frequency parts.  Only
/// meaningful when the wall sits at L0, i.e. at a wall-mean crossing.
inline Projection project_bogoliubov(const FullFieldConfig& cfg, const FullFieldState& state,
                                     ProjectionMomentum momentum = ProjectionMomentum::canonical) {
  const double w_wall = cfg.wall_frequency();
  const double phase = w_wall * state.t;
  if (std::abs(std::sin(phase)) > 1e-9 * std::max(1.0, std::abs(phase)))
    throw std::invalid_argument("project_bogoliubov: wall is not at its mean position");
  const std::size_t K = state.Q.size();
  std::vector<cplx> P = state.P;
  if (momentum == ProjectionMomentum::canonical) {
    const double r = cfg.epsilon * w_wall * std::cos(phase); // L'/L with L = L0
    for (std::size_t k = 0; k < K; ++k) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        if (j == k) continue;
        const double kk = static_cast<double>(k + 1), jj = static_cast<double>(j + 1);
        const double sgn = ((k - j) % 2 == 0) ? 1.0 : -1.0;
        s += sgn * 2.0 * kk * jj / (jj * jj - kk * kk) * r * state.Q[j];
      }
      P[k] -= s;
    }
  }
  Projection out;
  out.xi.resize(K);
  out.eta.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    const double w = static_cast<double>(i + 1);
    const cplx iw = cplx(0.0, 1.0) * P[i] / w;
    out.xi[i] = 0.5 * std::polar(1.0, w * state.t) * (state.Q[i] + iw);
    out.eta[i] = 0.5 * std::polar(1.0, -w * state.t) * (state.Q[i] - iw);
  }
  return out;
}

/// sum_m (m/n)(|xi_m|^2 - |eta_m|^2), equal to 1 for a unitary evolution.
inline double projection_norm(const Projection& pr, int n) {
  double s = 0.0;
  for (std::size_t i = 0; i < pr.xi.size(); ++i)
    s += static_cast<double>(i + 1) / n * (std::norm(pr.xi[i]) - std::norm(pr.eta[i]));
  return s;
}

/// Energy of the uncoupled oscillators, sum_k (|Q_k'|^2 + omega_k^2 |Q_k|^2) / 2
/// with the wall at L0.
inline double free_energy(const FullFieldState& s) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.Q.size(); ++i) {
    const double w = static_cast<double>(i + 1);
    e += 0.5 * (std::norm(s.P[i]) + w * w * std::norm(s.Q[i]));
  }
  return e;
}

} // namespace cavity
