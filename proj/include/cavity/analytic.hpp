/**
 * @file analytic.hpp
 * @brief Closed-form Bogoliubov coefficients rho_m^{(n)} and a contour-integral
 * oracle for them.
 *
 * rho_m^{(n)} equals xi_m^{(n)} for m > 0 and -eta_{-m}^{(n)} for m < 0.  Modes
 * are grouped into p independent subsets: with n = j + p q and m = j + p k the
 * coefficient is y_k^{(q,j)}, and rho vanishes when n - m is not a multiple of
 * p.  Coefficient formulas take the kinematic point at x = p tau.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "cavity/core_params.hpp"
#include "cavity/errors.hpp"
#include "cavity/parallel.hpp"
#include "cavity/specfun.hpp"

namespace cavity {

inline int sigma_of(int p) { return (p % 2 == 0) ? 1 : -1; }

/// Position of a positive mode number n inside its subset: n = j + p q.
struct SubsetIndex {
  int j = 0;
  long q = 0;
};

inline SubsetIndex decompose(int p, long n) {
  if (p < 1) throw std::invalid_argument("decompose: p must be positive");
  if (n < 1) throw std::invalid_argument("decompose: mode number must be positive");
  return {static_cast<int>(n % p), n / p};
}

/// Subset index k with m = j + p k, or nothing when m lies in another subset.
inline std::optional<long> lower_index(int p, int j, long m) {
  const long d = m - j;
  if (d % p != 0) return std::nullopt;
  return d / p;
}

namespace detail {

inline double int_pow_sign(double base, long e) { return (e % 2 != 0 && base < 0.0) ? -1.0 : 1.0; }

// exp(log_mag) * sign * base^e with base^e folded into the logarithm.
inline double scaled_power(double log_mag, double base, long e) {
  if (e == 0) return std::exp(log_mag);
  if (base == 0.0) return 0.0;
  return int_pow_sign(base, e) * std::exp(log_mag + e * std::log(std::abs(base)));
}

// Kinematic point of the p = 1 problem that reproduces the j = 0 subset of
// resonance p: the sign of S (hence of kappa and of gamma) flips by -sigma,
// while g and its phase are unchanged.
inline KinPoint semiresonance_image(const KinPoint& kin, int sigma) {
  KinPoint out = kin;
  out.S = -sigma * kin.S;
  out.kappa = -sigma * kin.kappa;
  out.gamma = -sigma * kin.gamma;
  return out;
}

} // namespace detail

/**
 * Coefficient xi_m^{(n)} of the semi-resonance p = 1 at the kinematic point
 * kin (taken at x = tau).  Uses the Jacobi form with the lower index as degree
 * for n >= m and the form with degree n - 1 for m > n.
 */
inline cplx xi_semiresonance(long n, long m, const KinPoint& kin) {
  if (n < 1 || m < 1) throw std::invalid_argument("xi_semiresonance: indices must be positive");
  const double kap = kin.kappa;
  const double x = 1.0 - 2.0 * kap * kap;
  const cplx phase = kin.lambda_pow(static_cast<double>(n + m));
  if (n >= m) {
    const long e = n - m;
    const double pw = (e == 0) ? 1.0 : std::pow(-kap, static_cast<double>(e));
    return pw * specfun::jacobi_poly(static_cast<int>(m), static_cast<double>(e), -1.0, x) * phase;
  }
  const long e = m - n;
  const double pw = std::pow(kap, static_cast<double>(e));
  return (1.0 - kap * kap) * pw * specfun::jacobi_poly(static_cast<int>(n - 1), static_cast<double>(e), 1.0, x) * phase;
}

/**
 * Hypergeometric closed form for y_k^{(q,j)} valid for every j, including the
 * j = 0 subset (where k <= 0 gives zero).
 */
inline cplx rho_hypergeometric(int p, int j, long q, long k, const KinPoint& kin) {
  using specfun::log_gamma;
  if (j == 0 && k <= 0) return 0.0;
  const int sigma = sigma_of(p);
  const double alpha = static_cast<double>(j) / p;
  const double kap = kin.kappa;
  const double x = kap * kap;
  if (kap == 0.0) return (k == q) ? cplx(1.0) : cplx(0.0);
  const cplx phase = kin.lambda_pow(static_cast<double>(k + q) + 2.0 * alpha);
  if (k >= 0 && k <= q) {
    const double lg = log_gamma(1.0 + q + alpha) - log_gamma(1.0 + k + alpha) - log_gamma(1.0 + q - k);
    const double pref = detail::scaled_power(lg, sigma * kap, q - k);
    return pref * specfun::hyp2f1_boundary(q + alpha, -k - alpha, 1.0 + q - k, x) * phase;
  }
  if (k > q) {
    const double lg = log_gamma(k + alpha) - log_gamma(q + alpha) - log_gamma(1.0 + k - q);
    const double pref = detail::scaled_power(lg, -sigma * kap, k - q);
    return pref * specfun::hyp2f1_boundary(k + alpha, -q - alpha, 1.0 + k - q, x) * phase;
  }
  // k < 0: this is -eta_{p|k| - j}^{(j + p q)}.
  const long kk = -k;
  if (j == 0) return 0.0;
  const double lg = log_gamma(kk - alpha) + log_gamma(1.0 + q + alpha) - log_gamma(1.0 + q + kk);
  const double sgn = (kk % 2 == 0) ? 1.0 : -1.0;
  const double eta = sgn * specfun::sin_pi(alpha) / std::numbers::pi * detail::scaled_power(lg, sigma * kap, q + kk) *
                     specfun::hyp2f1_boundary(q + alpha, kk - alpha, 1.0 + q + kk, x);
  return -eta * phase;
}

/// y_k^{(q,j)}: the j = 0 subset goes through the semi-resonance Jacobi forms,
/// the others through the hypergeometric forms.
inline cplx rho_subset(int p, int j, long q, long k, const KinPoint& kin) {
  if (j == 0) {
    if (k <= 0 || q <= 0) return 0.0;
    return xi_semiresonance(q, k, detail::semiresonance_image(kin, sigma_of(p)));
  }
  return rho_hypergeometric(p, j, q, k, kin);
}

/// rho_m^{(n)} for physical mode numbers; kin must be evaluated at p tau.
inline cplx rho_generic(int p, long n, long m, const KinPoint& kin) {
  if (m == 0) throw std::invalid_argument("rho_generic: lower index must be nonzero");
  const SubsetIndex s = decompose(p, n);
  const auto k = lower_index(p, s.j, m);
  if (!k) return 0.0;
  return rho_subset(p, s.j, s.q, *k, kin);
}

inline cplx rho(int p, double gamma, double tau, long n, long m) {
  return rho_generic(p, n, m, Kinematics(gamma).at(p * tau));
}

/// Long-time limit of rho_m^{(n)} below threshold.
inline cplx rho_asymptotic(int p, long n, long m, double gamma) {
  if (regime_of(gamma) != Regime::below) throw regime_error("rho_asymptotic: requires gamma < 1");
  if (m == 0) throw std::invalid_argument("rho_asymptotic: lower index must be nonzero");
  const SubsetIndex s = decompose(p, n);
  const auto k = lower_index(p, s.j, m);
  if (!k || s.j == 0) return 0.0;
  const double alpha = static_cast<double>(s.j) / p;
  const double v = *k + alpha;
  const double a = std::sqrt((1.0 - gamma) * (1.0 + gamma));
  const double th = std::atan2(gamma, a);
  const long sexp = s.q - *k;
  const double sg = (sigma_of(p) < 0 && sexp % 2 != 0) ? -1.0 : 1.0;
  return sg * specfun::sin_pi(v) / (std::numbers::pi * v) * std::polar(1.0, th * (*k + s.q + 2.0 * alpha));
}

// ---------------------------------------------------------------------------
// Reach of a coefficient row

namespace detail {

/// Cauchy bound on ln|y_k^{(q,j)}| (alpha = j/p taken as 1).  The generating
/// function is analytic on kappa < |z| < 1/kappa and on |z| = r its modulus is
/// at most ((r - kappa)/(1 - kappa r))^q (1 - kappa/r)/(1 - kappa r) for r > 1,
/// or ((r + kappa)/(1 + kappa r))^q (1 + kappa/r)/(1 - kappa r) for r < 1.
/// Minimised over ln r by golden section (the bound is convex in ln r).
inline double cauchy_log_bound(long q, long k, double kappa) {
  const double ak = std::abs(kappa);
  const double qd = static_cast<double>(q), kd = static_cast<double>(k);
  const bool outer = k > 0;
  auto f = [&](double s) {
    const double r = std::exp(s);
    if (outer) return qd * std::log((r - ak) / (1.0 - ak * r)) + std::log((1.0 - ak / r) / (1.0 - ak * r)) - kd * s;
    return qd * std::log((r + ak) / (1.0 + ak * r)) + std::log((1.0 + ak / r) / (1.0 - ak * r)) - kd * s;
  };
  const double edge = -std::log(ak);
  double lo = outer ? 0.0 : -edge, hi = outer ? edge : 0.0;
  const double shrink = 1e-12 * edge;
  lo += outer ? 0.0 : shrink;
  hi -= outer ? shrink : 0.0;
  constexpr double g = 0.6180339887498949;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo), f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(0.0)});
}

} // namespace detail

/**
 * Subset index K beyond which coefficients of a row (or column) anchored at
 * index q are negligible on both sides: for |k - q| > K - q the weighted tail
 * sum of |y_k|^2 stays below exp(log_tol).  Uses the Cauchy bound, which for
 * large q reaches out to about q (1 + kappa)/(1 - kappa).
 */
inline long subset_reach(long q, double kappa, double log_tol = -30.0) {
  const double ak = std::abs(kappa);
  if (ak == 0.0) return q + 1;
  // ratio of successive bounds is at most e^{-ln r}; 2 ln(k+1) + 8 covers the
  // weight k and the geometric tail
  auto small = [&](long k) {
    const double pos = detail::cauchy_log_bound(q, k, ak), neg = detail::cauchy_log_bound(q, -k, ak);
    return 2.0 * std::max(pos, neg) + 2.0 * std::log(k + 1.0) + 8.0 < log_tol;
  };
  long lo = q + 1, hi = q + 2;
  while (!small(hi)) {
    lo = hi;
    hi = hi + hi / 2 + 1;
    if (hi > (1L << 40)) throw numeric_error("subset_reach: coefficients do not decay");
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (small(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Generating-function oracle

inline constexpr double kContourTolerance = 1e-10;
inline constexpr long kContourStartSamples = 64;
inline constexpr long kContourMaxSamples = 1L << 20;

/**
 * Laurent generating function R^{(q,j)}(z) on the unit circle, z = e^{i phi}.
 * Written as z^q exp(i (q + alpha) Phi) with a phase Phi that is analytic
 * along the whole circle because |kappa| < 1.
 */
inline cplx generating_function(int p, int j, long q, double phi, const KinPoint& kin) {
  const int sigma = sigma_of(p);
  const double alpha = static_cast<double>(j) / p;
  const cplx z = std::polar(1.0, phi);
  const cplx v = static_cast<double>(sigma) * kin.kappa * z * kin.lambda; // sigma S z / g*
  const double Phi = 2.0 * kin.theta - 2.0 * std::arg(1.0 + v);
  return std::polar(1.0, q * phi + (q + alpha) * Phi);
}

/// Coefficient y_k^{(q,j)} by trapezoidal Cauchy integration over the unit
/// circle, doubling the sample count until successive values agree.
inline cplx contour_oracle(int p, int j, long q, long k, const KinPoint& kin, double start_angle = 0.0) {
  if (j == 0 && k <= 0) return 0.0;
  cplx prev{};
  bool have_prev = false;
  for (long N = kContourStartSamples; N <= kContourMaxSamples; N *= 2) {
    cplx sum{};
    for (long l = 0; l < N; ++l) {
      const double phi = start_angle + 2.0 * std::numbers::pi * l / N;
      sum += generating_function(p, j, q, phi, kin) * std::polar(1.0, -static_cast<double>(k) * phi);
    }
    sum /= static_cast<double>(N);
    if (have_prev && std::abs(sum - prev) < kContourTolerance) return sum;
    prev = sum;
    have_prev = true;
  }
  throw numeric_error("contour_oracle: no convergence within the sample cap");
}

namespace detail {
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
} // namespace detail

/// Samples needed so that aliased Laurent coefficients stay below ~1e-19.
inline long laurent_samples(long q, long kmax_abs, double kappa) {
  const long reach = kmax_abs + subset_reach(q, kappa, -90.0) + 16;
  long N = 64;
  while (N < reach) N *= 2;
  return N;
}

/**
 * All coefficients y_k^{(q,j)}, k in [kmin, kmax], from one FFT of the
 * generating function.  Entries with j = 0 and k <= 0 are zeroed.
 */
inline std::vector<cplx> laurent_row(int p, int j, long q, long kmin, long kmax, const KinPoint& kin) {
  if (kmax < kmin) return {};
  const long N = laurent_samples(q, std::max(std::abs(kmin), std::abs(kmax)), kin.kappa);
  if (N > (1L << 26)) throw numeric_error("laurent_row: required FFT length too large");
  std::vector<cplx> buf(static_cast<std::size_t>(N));
  for (long l = 0; l < N; ++l) buf[l] = generating_function(p, j, q, 2.0 * std::numbers::pi * l / N, kin);
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(N), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<cplx> out(static_cast<std::size_t>(kmax - kmin + 1));
  for (long k = kmin; k <= kmax; ++k) {
    const long idx = ((k % N) + N) % N;
    out[k - kmin] = (j == 0 && k <= 0) ? cplx(0.0) : buf[idx] / static_cast<double>(N);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient tables

/// Lower-index cutoff for sums over the row of upper index n.  Never smaller
/// than n + 8 p S^2(p tau), and extended so the tail of the row is negligible.
inline long default_truncation(int p, long n, const KinPoint& kin) {
  const SubsetIndex s = decompose(p, n);
  const long rule = n + p * static_cast<long>(std::ceil(8.0 * kin.S * kin.S));
  return std::max({64L, rule, s.j + p * subset_reach(s.q, kin.kappa)});
}

/// Upper-index cutoff for sums over the column of lower index m (|m| >= 1).
inline long default_upper_truncation(int p, long m, const KinPoint& kin) {
  const long am = std::abs(m);
  const long k = (am + p - 1) / p;
  const long rule = am + p * static_cast<long>(std::ceil(8.0 * kin.S * kin.S));
  return std::max({64L, rule, p * (subset_reach(k, kin.kappa) + 1)});
}

/// Dense table of rho_m^{(n)}, n = 1..n_max, m = -m_max..m_max (m = 0 unused).
struct CoefficientTable {
  int p = 1;
  double gamma = 0.0;
  double tau = 0.0;
  long n_max = 0;
  long m_max = 0;
  std::vector<cplx> data;

  CoefficientTable() = default;
  CoefficientTable(int p_, double gamma_, double tau_, long n_max_, long m_max_)
      : p(p_), gamma(gamma_), tau(tau_), n_max(n_max_), m_max(m_max_),
        data(static_cast<std::size_t>(n_max_ * (2 * m_max_ + 1))) {}

  cplx& at(long n, long m) { return data[static_cast<std::size_t>((n - 1) * (2 * m_max + 1) + (m + m_max))]; }
  cplx operator()(long n, long m) const {
    if (n < 1 || n > n_max || std::abs(m) > m_max) return 0.0;
    return data[static_cast<std::size_t>((n - 1) * (2 * m_max + 1) + (m + m_max))];
  }
  cplx xi(long n, long m) const { return (*this)(n, m); }
  cplx eta(long n, long m) const { return -(*this)(n, -m); }
};

enum class TableMethod { closed_form, fft };

/// Builds a table from the closed forms (or one FFT per upper index), rows
/// evaluated concurrently.
inline CoefficientTable build_table(int p, double gamma, double tau, long n_max, long m_max,
                                    TableMethod method = TableMethod::closed_form, unsigned threads = thread_count()) {
  CoefficientTable t(p, gamma, tau, n_max, m_max);
  const KinPoint kin = Kinematics(gamma).at(p * tau);
  parallel_for(
      static_cast<std::size_t>(n_max),
      [&](std::size_t row) {
        const long n = static_cast<long>(row) + 1;
        const SubsetIndex s = decompose(p, n);
        // k range covering m in [-m_max, m_max]
        const long kmin = -((m_max + s.j) / p) - 1;
        const long kmax = (m_max - s.j) / p + 1;
        std::vector<cplx> fft_row;
        if (method == TableMethod::fft) fft_row = laurent_row(p, s.j, s.q, kmin, kmax, kin);
        for (long k = kmin; k <= kmax; ++k) {
          const long m = s.j + p * k;
          if (m == 0 || std::abs(m) > m_max) continue;
          t.at(n, m) = (method == TableMethod::fft) ? fft_row[k - kmin] : rho_subset(p, s.j, s.q, k, kin);
        }
      },
      threads);
  return t;
}

} // namespace cavity

namespace cavity {

/// Largest deviation from each unitarity identity over small indices.
struct UnitarityReport {
  double rows = 0.0;    // sum_m m rho_m^{(n)*} rho_m^{(k)} = n delta_nk
  double columns = 0.0; // sum_n (m/n)[rho_m^{(n)*} rho_j^{(n)} - rho_{-m}^{(n)} rho_{-j}^{(n)*}] = delta_mj
  double cross = 0.0;   // sum_n (1/n)[rho_m^{(n)*} rho_{-j}^{(n)} - rho_j^{(n)*} rho_{-m}^{(n)}] = 0
  long row_cutoff = 0;
  long column_cutoff = 0;
};

/**
 * Unitarity residuals of the closed-form coefficients at kin (x = p tau) for
 * upper indices n, k <= n_check and lower indices m, j <= m_check, summed up to
 * the default truncation.
 *
 * In the column identity the eta part is conjugated on the second factor: the
 * reduced equations map rho_k to conj(rho_{-k}), and completeness over both
 * families of solutions gives this form.  It coincides with the naive
 * eta_m^* eta_j form for real coefficients and on the diagonal.
 */
inline UnitarityReport unitarity_residuals(int p, const KinPoint& kin, long n_check, long m_check,
                                           unsigned threads = thread_count()) {
  UnitarityReport rep;
  long M = 0;
  for (long n = 1; n <= n_check; ++n) M = std::max(M, default_truncation(p, n, kin));
  long N = 0;
  for (long m = 1; m <= m_check; ++m) N = std::max(N, default_upper_truncation(p, m, kin));
  rep.row_cutoff = M;
  rep.column_cutoff = N;

  std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(n_check));
  parallel_for(
      rows.size(),
      [&](std::size_t i) {
        const long n = static_cast<long>(i) + 1;
        auto& r = rows[i];
        r.assign(static_cast<std::size_t>(2 * M + 1), cplx(0.0));
        for (long m = -M; m <= M; ++m)
          if (m != 0) r[m + M] = rho_generic(p, n, m, kin);
      },
      threads);
  for (long n = 1; n <= n_check; ++n)
    for (long k = n; k <= n_check; ++k) {
      cplx s = 0.0;
      for (long m = -M; m <= M; ++m) s += static_cast<double>(m) * std::conj(rows[n - 1][m + M]) * rows[k - 1][m + M];
      rep.rows = std::max(rep.rows, std::abs(s - (n == k ? static_cast<double>(n) : 0.0)));
    }

  // cols[2 (m-1)] holds rho_m^{(n)}, cols[2 (m-1) + 1] holds rho_{-m}^{(n)}.
  std::vector<std::vector<cplx>> cols(static_cast<std::size_t>(2 * m_check));
  parallel_for(
      cols.size(),
      [&](std::size_t i) {
        const long m = static_cast<long>(i / 2) + 1;
        const long lower = (i % 2 == 0) ? m : -m;
        auto& c = cols[i];
        c.resize(static_cast<std::size_t>(N));
        for (long n = 1; n <= N; ++n) c[n - 1] = rho_generic(p, n, lower, kin);
      },
      threads);
  for (long m = 1; m <= m_check; ++m)
    for (long j = m; j <= m_check; ++j) {
      const auto& xm = cols[2 * (m - 1)];
      const auto& em = cols[2 * (m - 1) + 1];
      const auto& xj = cols[2 * (j - 1)];
      const auto& ej = cols[2 * (j - 1) + 1];
      cplx s2 = 0.0, s3 = 0.0;
      for (long n = 1; n <= N; ++n) {
        const double w = 1.0 / static_cast<double>(n);
        s2 += w * (std::conj(xm[n - 1]) * xj[n - 1] - em[n - 1] * std::conj(ej[n - 1]));
        s3 += w * (std::conj(xm[n - 1]) * ej[n - 1] - std::conj(xj[n - 1]) * em[n - 1]);
      }
      s2 *= static_cast<double>(m);
      rep.columns = std::max(rep.columns, std::abs(s2 - (m == j ? 1.0 : 0.0)));
      rep.cross = std::max(rep.cross, std::abs(s3));
    }
  return rep;
}

} // namespace cavity
