/**
 * @file observables.hpp
 * @brief Photon numbers, creation rates and total energy built on the
 * closed-form coefficients, plus the standard initial states.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cavity/analytic.hpp"
#include "cavity/core_params.hpp"
#include "cavity/errors.hpp"
#include "cavity/specfun.hpp"

namespace cavity {

// ---------------------------------------------------------------------------
// Initial states

/// Second moments <b_n^+ b_k> (nbar) and <b_n b_k> (anom) of the initial field,
/// stored sparsely with both (n,k) and (k,n) present.
class InitialState {
 public:
  using Moments = std::map<std::pair<long, long>, cplx>;

  static InitialState vacuum() { return InitialState("vacuum"); }

  /// Number states with the given mean occupations per mode.
  static InitialState fock(const std::map<long, double>& occupation) {
    InitialState s("fock");
    for (const auto& [n, N] : occupation) {
      if (n < 1) throw std::invalid_argument("fock: mode numbers must be positive");
      if (N < 0.0) throw std::invalid_argument("fock: occupations must be nonnegative");
      if (N > 0.0) s.nbar_[{n, n}] = N;
    }
    return s;
  }

  /// Coherent state |alpha> in mode r, all other modes in vacuum.
  static InitialState coherent(long r, cplx alpha) {
    if (r < 1) throw std::invalid_argument("coherent: mode number must be positive");
    InitialState s("coherent");
    if (alpha != cplx(0.0)) {
      s.nbar_[{r, r}] = std::norm(alpha);
      s.anom_[{r, r}] = alpha * alpha;
    }
    return s;
  }

  /// Classical equipartition nu_n = T / n for n <= cutoff.
  static InitialState thermal(double T, long cutoff) {
    if (T < 0.0) throw std::invalid_argument("thermal: temperature must be nonnegative");
    if (cutoff < 1) throw std::invalid_argument("thermal: cutoff must be positive");
    InitialState s("thermal");
    if (T > 0.0)
      for (long n = 1; n <= cutoff; ++n) s.nbar_[{n, n}] = T / static_cast<double>(n);
    return s;
  }

  const std::string& kind() const { return kind_; }
  const Moments& nbar() const { return nbar_; }
  const Moments& anom() const { return anom_; }
  bool is_vacuum() const { return nbar_.empty() && anom_.empty(); }

  cplx nbar(long n, long k) const { return lookup(nbar_, n, k); }
  cplx anom(long n, long k) const { return lookup(anom_, n, k); }

  /// Upper indices that appear in any moment.
  std::vector<long> support() const {
    std::vector<long> s;
    for (const auto& [nk, v] : nbar_) s.push_back(nk.first);
    for (const auto& [nk, v] : anom_) s.push_back(nk.first);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  }

  /// Hermitian nbar with nonnegative diagonal, symmetric anom.
  void validate() const {
    for (const auto& [nk, v] : nbar_) {
      if (std::abs(v - std::conj(nbar(nk.second, nk.first))) > 1e-12 * std::max(1.0, std::abs(v)))
        throw std::invalid_argument("initial state: <b^+ b> is not Hermitian");
      if (nk.first == nk.second && (v.real() < 0.0 || v.imag() != 0.0))
        throw std::invalid_argument("initial state: negative or complex occupation");
    }
    for (const auto& [nk, v] : anom_)
      if (std::abs(v - anom(nk.second, nk.first)) > 1e-12 * std::max(1.0, std::abs(v)))
        throw std::invalid_argument("initial state: <b b> is not symmetric");
  }

 private:
  explicit InitialState(std::string kind) : kind_(std::move(kind)) {}

  static cplx lookup(const Moments& m, long n, long k) {
    const auto it = m.find({n, k});
    return it == m.end() ? cplx(0.0) : it->second;
  }

  std::string kind_;
  Moments nbar_;
  Moments anom_;
};

/// E(0) = sum_n n <b_n^+ b_n>.
inline double initial_energy(const InitialState& s) {
  double e = 0.0;
  for (const auto& [nk, v] : s.nbar())
    if (nk.first == nk.second) e += nk.first * v.real();
  return e;
}

/// Total photon number at tau = 0.
inline double initial_photons(const InitialState& s) {
  double e = 0.0;
  for (const auto& [nk, v] : s.nbar())
    if (nk.first == nk.second) e += v.real();
  return e;
}

/// Constant of the motion that fixes the phase of energy growth:
/// G = 2 sum_n sqrt(n(n+p)) <b_n^+ b_{n+p}> + sum_{n<p} sqrt(n(p-n)) <b_n b_{p-n}>.
inline cplx g_parameter(int p, const InitialState& s) {
  cplx G = 0.0;
  for (const auto& [nk, v] : s.nbar())
    if (nk.second == nk.first + p) G += 2.0 * std::sqrt(static_cast<double>(nk.first) * nk.second) * v;
  for (long n = 1; n < p; ++n) G += std::sqrt(static_cast<double>(n) * (p - n)) * s.anom(n, p - n);
  return G;
}

// ---------------------------------------------------------------------------
// Total energy

/// Closed-form total energy; the hyperbolic functions become trigonometric
/// above threshold and polynomial at gamma = 1 through Kinematics::S.
inline double total_energy(int p, double gamma, const InitialState& s, double tau) {
  const Kinematics kin(gamma);
  const int sigma = sigma_of(p);
  const double E0 = initial_energy(s);
  const cplx G = g_parameter(p, s);
  const double S1 = kin.S(p * tau);
  const double S2 = kin.S(2.0 * p * tau);
  return E0 + 2.0 * S1 * S1 * (E0 + (p * p - 1.0) / 24.0 + 0.5 * gamma * sigma * G.imag()) - sigma * G.real() * S2 / 2.0;
}

/// Energy created from vacuum, (p^2 - 1)/12 * S(p tau)^2.
inline double vacuum_energy(int p, double gamma, double tau) {
  const double S = Kinematics(gamma).S(p * tau);
  return (p * p - 1.0) / 12.0 * S * S;
}

/// Right-hand side of the second-order energy equation.
inline double energy_ode_rhs(int p, double gamma, const InitialState& s, double energy) {
  const double a2 = 1.0 - gamma * gamma; // a^2, negative above threshold
  const double E0 = initial_energy(s);
  const cplx G = g_parameter(p, s);
  return 4.0 * p * p * a2 * energy + 4.0 * p * p * gamma * gamma * E0 + p * p * (p * p - 1.0) / 6.0 +
         2.0 * p * p * gamma * sigma_of(p) * G.imag();
}

/// Central-difference second derivative of E(tau) minus the energy equation.
inline double energy_ode_residual(int p, double gamma, const InitialState& s, double e_minus, double e_mid,
                                  double e_plus, double h) {
  const double second = (e_plus - 2.0 * e_mid + e_minus) / (h * h);
  return second - energy_ode_rhs(p, gamma, s, e_mid);
}

// ---------------------------------------------------------------------------
// Mode occupations

/// Occupation of mode m split into the part created from vacuum and the part
/// that depends on the initial state.
struct Occupation {
  double vacuum = 0.0;
  double state = 0.0;
  double total() const { return vacuum + state; }
};

/// Mean photon number in mode m from a coefficient table.  The vacuum sum runs
/// over all upper indices stored in the table.
inline Occupation mode_occupation_parts(const CoefficientTable& t, const InitialState& s, long m) {
  Occupation occ;
  for (long n = 1; n <= t.n_max; ++n) occ.vacuum += static_cast<double>(m) / n * std::norm(t(n, -m));
  double st = 0.0;
  for (const auto& [nk, v] : s.nbar()) {
    const auto [n, k] = nk;
    const cplx term = std::conj(t.xi(n, m)) * t.xi(k, m) + std::conj(t.eta(n, m)) * t.eta(k, m);
    st += (static_cast<double>(m) / std::sqrt(static_cast<double>(n) * k) * term * v).real();
  }
  for (const auto& [nk, v] : s.anom()) {
    const auto [n, k] = nk;
    st += 2.0 * (static_cast<double>(m) / std::sqrt(static_cast<double>(n) * k) * t.eta(n, m) * t.xi(k, m) * v).real();
  }
  occ.state = st;
  return occ;
}

inline double mode_occupation(const CoefficientTable& t, const InitialState& s, long m) {
  return mode_occupation_parts(t, s, m).total();
}

/// Vacuum occupation of mode m by summing its coefficient column over upper
/// indices up to the default column cutoff.
inline double vacuum_occupation_direct(int p, const KinPoint& kin, long m) {
  const long N = default_upper_truncation(p, m, kin);
  double acc = 0.0;
  for (long n = 1; n <= N; ++n) acc += static_cast<double>(m) / n * std::norm(rho_generic(p, n, -m, kin));
  return acc;
}

/// Whole coefficient rows rho_m^{(n)}, m = -M..M, for every upper index in the
/// support of a state, via one FFT each.
class StateRows {
 public:
  StateRows(int p, const KinPoint& kin, const InitialState& s, long M) : p_(p), M_(M) {
    for (long n : s.support()) {
      const SubsetIndex si = decompose(p, n);
      const long kmin = -((M + si.j) / p) - 1;
      const long kmax = (M - si.j) / p + 1;
      const auto row = laurent_row(p, si.j, si.q, kmin, kmax, kin);
      std::vector<cplx> full(static_cast<std::size_t>(2 * M + 1), cplx(0.0));
      for (long k = kmin; k <= kmax; ++k) {
        const long m = si.j + p * k;
        if (m != 0 && std::abs(m) <= M) full[m + M] = row[k - kmin];
      }
      rows_.emplace(n, std::move(full));
    }
  }

  long M() const { return M_; }
  cplx rho(long n, long m) const {
    const auto it = rows_.find(n);
    if (it == rows_.end() || std::abs(m) > M_ || m == 0) return 0.0;
    return it->second[m + M_];
  }
  cplx xi(long n, long m) const { return rho(n, m); }
  cplx eta(long n, long m) const { return -rho(n, -m); }

  /// |1 - sum_{m<=M} (m/n)(|xi_m|^2 - |eta_m|^2)|: the part of the row
  /// normalisation lost to truncation, worst row of the support.
  double norm_deficit() const {
    double worst = 0.0;
    for (const auto& [n, r] : rows_) {
      double s = 0.0;
      for (long m = 1; m <= M_; ++m) s += static_cast<double>(m) / n * (std::norm(r[m + M_]) - std::norm(r[M_ - m]));
      worst = std::max(worst, std::abs(1.0 - s));
    }
    return worst;
  }

 private:
  int p_;
  long M_;
  std::map<long, std::vector<cplx>> rows_;
};

/// Lower-index range that holds every row of the state's support.
inline long state_row_cutoff(int p, const KinPoint& kin, const InitialState& s) {
  long M = 64;
  for (long n : s.support()) M = std::max(M, default_truncation(p, n, kin));
  return M;
}

/// State-dependent occupation of mode m (all three sums except the vacuum one).
inline double state_occupation(const StateRows& rows, const InitialState& s, long m) {
  double st = 0.0;
  for (const auto& [nk, v] : s.nbar()) {
    const auto [n, k] = nk;
    const cplx term = std::conj(rows.xi(n, m)) * rows.xi(k, m) + std::conj(rows.eta(n, m)) * rows.eta(k, m);
    st += (static_cast<double>(m) / std::sqrt(static_cast<double>(n) * k) * term * v).real();
  }
  for (const auto& [nk, v] : s.anom()) {
    const auto [n, k] = nk;
    st += 2.0 * (static_cast<double>(m) / std::sqrt(static_cast<double>(n) * k) * rows.eta(n, m) * rows.xi(k, m) * v).real();
  }
  return st;
}

// ---------------------------------------------------------------------------
// Vacuum creation rates

/// Long-time rate of mode j + p q below threshold.
inline double vacuum_rate_plateau(int p, int j, long q, double gamma) {
  const double a = std::sqrt(std::max(0.0, (1.0 - gamma) * (1.0 + gamma)));
  const double s = specfun::sin_pi(static_cast<double>(j) / p);
  return 2.0 * a * p * p * s * s / (std::numbers::pi * std::numbers::pi * (j + p * q));
}

/// Rate of photon creation from vacuum in mode j + p q as a product of two
/// hypergeometric functions (kin at x = p tau).  Zero for j = 0.
inline double vacuum_rate(int p, int j, long q, const KinPoint& kin) {
  using specfun::log_gamma;
  if (j == 0) return 0.0;
  const double al = static_cast<double>(j) / p;
  const double kap = kin.kappa;
  if (kap == 0.0) return 0.0;
  const double x = kap * kap;
  const double lg = log_gamma(q + al) + log_gamma(1.0 + q + al) + log_gamma(2.0 - al) - log_gamma(al) -
                    log_gamma(q + 1.0) - log_gamma(q + 2.0);
  const double pref = 2.0 * p * kin.lambda.real() * specfun::sin_pi(al) / std::numbers::pi *
                      detail::scaled_power(lg, kap, 2 * q + 1);
  return pref * specfun::hyp2f1_boundary(q + al, -al, 1.0 + q, x) * specfun::hyp2f1_boundary(q + al, 1.0 - al, 2.0 + q, x);
}

/// Same rate from the coefficients: -2 sigma m Re[xi_m^{(j)} eta_m^{(p-j)}].
inline double vacuum_rate_coefficients(int p, long m, const KinPoint& kin) {
  const long j = m % p;
  if (j == 0) return 0.0;
  const cplx xi = rho_generic(p, j, m, kin);
  const cplx eta = -rho_generic(p, p - j, -m, kin);
  return -2.0 * sigma_of(p) * m * (xi * eta).real();
}

/// FFT length above which whole-row rates switch to the product form.
inline constexpr long kMaxRateFft = 1L << 22;

/// Vacuum rates for every mode m = 1..p (q_max + 1) from p - 1 FFT rows.  Near
/// kappa = 1 the rows decay too slowly for an alias-free transform, and the
/// hypergeometric product form is evaluated per mode instead.
inline std::vector<double> vacuum_rates_fft(int p, const KinPoint& kin, long q_max) {
  std::vector<double> out(static_cast<std::size_t>(p * (q_max + 1)), 0.0);
  if (p < 2) return out;
  if (laurent_samples(0, q_max + 1, kin.kappa) > kMaxRateFft) {
    for (int j = 1; j < p; ++j)
      for (long q = 0; q <= q_max; ++q) out[j + p * q - 1] = vacuum_rate(p, j, q, kin);
    return out;
  }
  std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(p));
  for (int j = 1; j < p; ++j) rows[j] = laurent_row(p, j, 0, -q_max - 1, q_max, kin);
  const int sigma = sigma_of(p);
  const long off = q_max + 1; // index of k = 0
  for (int j = 1; j < p; ++j)
    for (long q = 0; q <= q_max; ++q) {
      const long m = j + p * q;
      const cplx xi = rows[j][off + q];
      const cplx eta = -rows[p - j][off - q - 1];
      out[m - 1] = -2.0 * sigma * m * (xi * eta).real();
    }
  return out;
}

/// Subset reach used for whole-spectrum vacuum sums.
inline long vacuum_q_max(const KinPoint& kin) { return subset_reach(1, kin.kappa, -46.0); }

/// Total vacuum rate, sum over n of the coefficients with lower indices 1..p.
inline double vacuum_rate_total(int p, const KinPoint& kin) {
  double acc = 0.0;
  const long N = default_upper_truncation(p, p, kin);
  for (long n = 1; n <= N; ++n) {
    cplx s = 0.0;
    for (long m = 1; m < p; ++m)
      s += static_cast<double>(m * (p - m)) * std::conj(rho_generic(p, n, -m, kin)) * rho_generic(p, n, p - m, kin);
    acc += s.real() / n;
  }
  return 2.0 * sigma_of(p) * acc;
}

// ---------------------------------------------------------------------------
// Total vacuum photon number

/// Second derivative of the total vacuum photon number, hypergeometric form.
inline double nvac_total_curvature(int p, const KinPoint& kin) {
  if (p < 2) return 0.0;
  const double kap = kin.kappa;
  const double x = kap * kap;
  const double g2k2 = kin.gamma * kin.gamma * x;
  double acc = 0.0;
  for (int m = 1; m < p; ++m) {
    const double r = static_cast<double>(m) / p;
    const double w = static_cast<double>(m * (p - m));
    const double f1 = kap / p * specfun::hyp2f1_boundary(r, 1.0 - r, 2.0, x);
    const double f2 = specfun::hyp2f1_boundary(r, -r, 1.0, x) * specfun::hyp2f1_boundary(r - 1.0, 1.0 - r, 1.0, x);
    acc += w * (w * f1 * f1 + (1.0 - 2.0 * g2k2) * f2);
  }
  return 2.0 * acc;
}

/// Same quantity from the low-index coefficients.
inline double nvac_total_curvature_coefficients(int p, const KinPoint& kin) {
  cplx acc = 0.0;
  for (long m = 1; m < p; ++m) {
    const cplx xi_a = rho_generic(p, m, m, kin);
    const cplx xi_b = rho_generic(p, p - m, p - m, kin);
    const cplx eta_a = -rho_generic(p, p - m, -m, kin); // eta_m^{(p-m)}
    const cplx eta_b = -rho_generic(p, m, -(p - m), kin); // eta_{p-m}^{(m)}
    acc += static_cast<double>(m * (p - m)) * (xi_a * xi_b + std::conj(eta_a) * std::conj(eta_b));
  }
  return 2.0 * acc.real();
}

/// p = 2 elliptic-integral form of the curvature.
inline double nvac_curvature_elliptic_p2(const KinPoint& kin) {
  const double k = std::abs(kin.kappa);
  if (k == 0.0) return 2.0;
  const double kt2 = 1.0 - k * k;
  const double K = specfun::elliptic_K(k), E = specfun::elliptic_E(k);
  const double g2 = kin.gamma * kin.gamma;
  return 8.0 / (std::numbers::pi * std::numbers::pi * k * k) *
         (kt2 * kt2 * K * K - 2.0 * kt2 * K * E + (1.0 + k * k - 2.0 * g2 * k * k * k * k) * E * E);
}

/// Vacuum photons in the principal mode for p = 2 (kin at x = 2 tau).
inline double n1_vacuum_p2(const KinPoint& kin) {
  const double k = std::abs(kin.kappa);
  const double K = specfun::elliptic_K(k), E = specfun::elliptic_E(k);
  return 2.0 / (std::numbers::pi * std::numbers::pi) * K * (2.0 * E - (1.0 - k * k) * K) - 0.5;
}

/// Principal-mode rate for p = 2 in elliptic form.
inline double rate1_elliptic_p2(const KinPoint& kin) {
  const double k = kin.kappa;
  if (k == 0.0) return 0.0;
  const double ak = std::abs(k);
  const double K = specfun::elliptic_K(ak), E = specfun::elliptic_E(ak);
  return 8.0 * kin.lambda.real() / (std::numbers::pi * std::numbers::pi * k) * E * (E - (1.0 - k * k) * K);
}

// ---------------------------------------------------------------------------
// Quadrature over slow time

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

inline constexpr int kGaussNodes = 8;

/// Panel width for slow-time quadrature: rates vary on the scale 1/(p max(1, |gamma|)).
inline double quadrature_panel(int p, double gamma) { return std::min(0.1, 0.25 / (p * std::max(1.0, std::abs(gamma)))); }

/**
 * Integrates f over [0, t] for every t in the increasing grid, using composite
 * Gauss-Legendre panels that end on grid points.  f(s) returns a vector of
 * fixed length; the result holds one accumulated vector per grid point.
 */
template <class F>
std::vector<std::vector<double>> integrate_over_grid(const std::vector<double>& grid, double panel, std::size_t width, F&& f) {
  const auto [x, w] = gauss_legendre(kGaussNodes);
  std::vector<std::vector<double>> out;
  std::vector<double> acc(width, 0.0);
  double t0 = 0.0;
  for (double t1 : grid) {
    if (t1 > t0) {
      const long panels = std::max<long>(1, static_cast<long>(std::ceil((t1 - t0) / panel - 1e-12)));
      const double h = (t1 - t0) / panels;
      for (long i = 0; i < panels; ++i) {
        const double a = t0 + i * h;
        for (int g = 0; g < kGaussNodes; ++g) {
          const double s = a + 0.5 * h * (x[g] + 1.0);
          const std::vector<double> v = f(s);
          for (std::size_t c = 0; c < width && c < v.size(); ++c) acc[c] += 0.5 * h * w[g] * v[c];
        }
      }
      t0 = t1;
    }
    out.push_back(acc);
  }
  return out;
}

/// Vacuum spectrum at each grid time: per-mode occupations N_m (m = 1..m_max)
/// and whole-spectrum totals, obtained by integrating the per-mode rates.
struct VacuumSpectrum {
  std::vector<double> tau;
  std::vector<std::vector<double>> occupation; // [tau][m-1]
  std::vector<double> photons;                 // sum over all modes
  std::vector<double> energy;                  // sum over all modes of m N_m
};

inline VacuumSpectrum vacuum_spectrum(int p, double gamma, const std::vector<double>& grid, long m_max) {
  VacuumSpectrum out;
  out.tau = grid;
  const Kinematics kin(gamma);
  const std::size_t width = static_cast<std::size_t>(m_max) + 2;
  auto f = [&](double s) {
    std::vector<double> v(width, 0.0);
    const KinPoint k = kin.at(p * s);
    const long q_max = std::max(vacuum_q_max(k), m_max / p + 1);
    const std::vector<double> rates = vacuum_rates_fft(p, k, q_max);
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double m = static_cast<double>(i + 1);
      if (i < static_cast<std::size_t>(m_max)) v[i] = rates[i];
      v[m_max] += rates[i];
      v[m_max + 1] += m * rates[i];
    }
    return v;
  };
  const auto acc = integrate_over_grid(grid, quadrature_panel(p, gamma), width, f);
  for (const auto& a : acc) {
    out.occupation.emplace_back(a.begin(), a.begin() + m_max);
    out.photons.push_back(a[m_max]);
    out.energy.push_back(a[m_max + 1]);
  }
  return out;
}

/// Total vacuum photon number at each grid time from its closed-form second
/// derivative: N(t) = int_0^t (t - s) N''(s) ds.
inline std::vector<double> vacuum_photons_from_curvature(int p, double gamma, const std::vector<double>& grid) {
  const Kinematics kin(gamma);
  auto f = [&](double s) {
    const double c = nvac_total_curvature(p, kin.at(p * s));
    return std::vector<double>{c, s * c};
  };
  const auto acc = integrate_over_grid(grid, quadrature_panel(p, gamma), 2, f);
  std::vector<double> out;
  for (std::size_t i = 0; i < grid.size(); ++i) out.push_back(grid[i] * acc[i][0] - acc[i][1]);
  return out;
}

// ---------------------------------------------------------------------------
// Asymptotics

/// Long-time rate of change of the state-dependent photon number (gamma < 1).
inline double cavity_rate_asymptotic(int p, double gamma, const InitialState& s) {
  if (regime_of(gamma) != Regime::below) throw regime_error("cavity_rate_asymptotic: requires gamma < 1");
  const double a = std::sqrt((1.0 - gamma) * (1.0 + gamma));
  const cplx w(a, gamma);
  const int sigma = sigma_of(p);
  cplx acc = 0.0;
  auto term = [&](long N, long K, cplx v, bool anomalous) {
    const long m = N % p;
    if (m == 0 || K % p != m) return;
    const long n = N / p, k = K / p;
    const double sn = specfun::sin_pi(static_cast<double>(m) / p);
    const double sg = ((n + k) % 2 != 0 && sigma < 0) ? -1.0 : 1.0;
    const double pref = sn * sn * sg / std::sqrt(static_cast<double>(N) * K);
    if (!anomalous) acc += pref * v * std::pow(w, static_cast<double>(k - n));
    else acc -= pref * sigma * (v * std::pow(w, static_cast<double>(k + n + 1))).real();
  };
  for (const auto& [nk, v] : s.nbar()) term(nk.first, nk.second, v, false);
  for (const auto& [nk, v] : s.anom()) term(nk.first, nk.second, v, true);
  if (!std::isfinite(acc.real())) throw numeric_error("cavity_rate_asymptotic: state moments do not decay");
  return 4.0 * a * p * p / (std::numbers::pi * std::numbers::pi) * acc.real();
}

struct ModeCount {
  long count = 0;          // modes at or above half their plateau rate
  double estimate = 0.0;   // S^2 / ln S, zero when S <= e
};

/// Effectively excited modes: modes whose vacuum rate exceeds half of its
/// long-time plateau (kin at x = p tau, gamma < 1).  Each subset is scanned in q
/// until the rate has stayed below the threshold for a run of consecutive q.
inline ModeCount excited_mode_count(const KinPoint& kin, int p) {
  if (regime_of(kin.gamma) != Regime::below) throw regime_error("excited_mode_count: requires gamma < 1");
  ModeCount mc;
  const double S = kin.S;
  if (S > std::numbers::e) mc.estimate = S * S / std::log(S);
  constexpr long kRun = 64;
  for (int j = 1; j < p; ++j) {
    long below = 0;
    for (long q = 0; below < kRun; ++q) {
      if (vacuum_rate(p, j, q, kin) >= 0.5 * vacuum_rate_plateau(p, j, q, kin.gamma)) {
        ++mc.count;
        below = 0;
      } else {
        ++below;
      }
    }
  }
  return mc;
}

// ---------------------------------------------------------------------------
// Series over a tau grid

/// Everything reported per slow time for one resonance and initial state.
struct ObservableSeries {
  std::vector<double> tau;
  long m_max = 0;
  std::vector<std::vector<double>> occupation;         // [tau][m-1], total N_m
  std::vector<std::vector<double>> vacuum_occupation;  // [tau][m-1]
  std::vector<std::vector<double>> vacuum_rate;        // [tau][m-1]
  std::vector<double> n_vac;                           // all modes
  std::vector<double> n_cav;                           // all modes, includes N(0)
  std::vector<double> energy_closed;
  std::vector<double> energy_sum;                      // sum_m m N_m
  std::vector<double> tail;                            // row normalisation deficit (truncation loss)
  cplx G = 0.0;
};

/**
 * Vacuum parts come from integrating per-mode rates over slow time, the
 * state-dependent parts from whole coefficient rows at each grid point.  The
 * grid must increase.  row_cutoff = 0 selects the default truncation.
 */
inline ObservableSeries observable_series(int p, double gamma, const InitialState& s, const std::vector<double>& grid,
                                          long m_max, long row_cutoff = 0) {
  if (grid.empty()) throw std::invalid_argument("observable_series: empty tau grid");
  ObservableSeries out;
  out.tau = grid;
  out.m_max = m_max;
  out.G = g_parameter(p, s);
  const Kinematics kinematics(gamma);
  VacuumSpectrum vac;
  if (p >= 2) vac = vacuum_spectrum(p, gamma, grid, m_max);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double tau = grid[i];
    const KinPoint kin = kinematics.at(p * tau);
    std::vector<double> nv(static_cast<std::size_t>(m_max), 0.0), rates(static_cast<std::size_t>(m_max), 0.0);
    if (p >= 2) {
      nv = vac.occupation[i];
      const auto r = vacuum_rates_fft(p, kin, m_max / p + 1);
      std::copy(r.begin(), r.begin() + m_max, rates.begin());
    }
    double n_cav = 0.0, e_state = 0.0, tail = 0.0;
    std::vector<double> occ = nv;
    if (!s.is_vacuum()) {
      const long M = std::max(m_max, row_cutoff > 0 ? row_cutoff : state_row_cutoff(p, kin, s));
      const StateRows rows(p, kin, s, M);
      for (long m = 1; m <= M; ++m) {
        const double nm = state_occupation(rows, s, m);
        n_cav += nm;
        e_state += m * nm;
        if (m <= m_max) occ[m - 1] += nm;
      }
      tail = rows.norm_deficit();
    }
    out.occupation.push_back(occ);
    out.vacuum_occupation.push_back(nv);
    out.vacuum_rate.push_back(rates);
    out.n_vac.push_back(p >= 2 ? vac.photons[i] : 0.0);
    out.n_cav.push_back(n_cav);
    out.energy_closed.push_back(total_energy(p, gamma, s, tau));
    out.energy_sum.push_back((p >= 2 ? vac.energy[i] : 0.0) + e_state);
    out.tail.push_back(tail);
  }
  return out;
}

} // namespace cavity
