/**
 * @file specfun.hpp
 * @brief Special functions used by the closed-form Bogoliubov coefficients.
 *
 * Log-gamma and digamma for real arguments, the Gauss function 2F1 restricted
 * to the logarithmic class c = a + b + 1, Jacobi polynomials and the complete
 * elliptic integrals K and E (arithmetic-geometric mean).
 */
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <math.h> // lgamma_r

#include "cavity/errors.hpp"

namespace cavity::specfun {

/// Crossover between the power series and the 1-x connection formula.
inline constexpr double kSeriesSwitch = 0.7;
/// Above this value of max(|a|,|b|)*(1-x) the connection formula loses digits
/// to cancellation and the power series is used instead.
inline constexpr double kConnectionParamLimit = 2.0;
/// Maximum number of series terms before reporting nonconvergence.
inline constexpr long kMaxTerms = 10000000;

/// sin(pi x) with exact zeros at the integers.
inline double sin_pi(double x) {
  const double r = std::remainder(x, 2.0); // r in [-1, 1]
  if (r == 0.0 || std::abs(r) == 1.0) return 0.0;
  return std::sin(std::numbers::pi * r);
}

/// Natural log of Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive, got " + std::to_string(x));
  int sign = 1;
  return ::lgamma_r(x, &sign);
}

/// log|Gamma(x)| together with the sign of Gamma(x).
struct SignedLog {
  double log = 0.0;
  int sign = 1;
};

/// log|Gamma(x)| for any real non-pole x.  Negative arguments go through the
/// reflection Gamma(x) Gamma(1-x) = pi / sin(pi x), so only positive arguments
/// reach log_gamma.
inline SignedLog log_abs_gamma(double x) {
  if (x > 0.0) return {log_gamma(x), 1};
  const double s = sin_pi(x);
  if (s == 0.0) throw std::domain_error("log_abs_gamma: pole at nonpositive integer " + std::to_string(x));
  return {std::log(std::numbers::pi) - std::log(std::abs(s)) - log_gamma(1.0 - x), s > 0.0 ? 1 : -1};
}

/// 1/Gamma(x); zero at the poles of Gamma.
inline double rgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  const SignedLog lg = log_abs_gamma(x);
  return lg.sign * std::exp(-lg.log);
}

/// Digamma function psi(x) for real non-pole x.
inline double digamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) throw std::domain_error("digamma: pole at nonpositive integer");
  if (x < 0.5) {
    // psi(x) = psi(1-x) - pi cot(pi x)
    const double r = std::remainder(x, 1.0);
    return digamma(1.0 - x) - std::numbers::pi / std::tan(std::numbers::pi * r);
  }
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic series with Bernoulli numbers B_2 .. B_14.
  const double tail =
      inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
  return acc + std::log(x) - 0.5 * inv - tail;
}

namespace detail {

inline bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

inline double hyp2f1_terminating(double a, double b, double c, double x) {
  // One of a, b is -N; the sum has N+1 terms.
  const double neg = is_nonpositive_integer(a) ? a : b;
  const long n_terms = static_cast<long>(-neg);
  long double term = 1.0L, sum = 1.0L;
  for (long k = 0; k < n_terms; ++k) {
    term *= (static_cast<long double>(a) + k) * (static_cast<long double>(b) + k) /
            ((static_cast<long double>(c) + k) * (k + 1)) * x;
    sum += term;
  }
  return static_cast<double>(sum);
}

inline double hyp2f1_series(double a, double b, double c, double x) {
  long double term = 1.0L, sum = 1.0L;
  int quiet = 0;
  for (long k = 0; k < kMaxTerms; ++k) {
    const long double ratio = (static_cast<long double>(a) + k) * (static_cast<long double>(b) + k) /
                              ((static_cast<long double>(c) + k) * (k + 1)) * x;
    term *= ratio;
    sum += term;
    if (std::abs(ratio) < 1.0L && std::abs(term) <= 1e-19L * std::abs(sum)) {
      if (++quiet >= 3) return static_cast<double>(sum);
    } else {
      quiet = 0;
    }
  }
  throw numeric_error("hyp2f1: power series did not converge within term cap");
}

// Connection formula for c = a + b + 1 expanded about x = 1:
//   F = G(c)/(G(a+1)G(b+1))
//     + y G(c)/(G(a)G(b)) sum_n (a+1)_n (b+1)_n / (n!(n+1)!) y^n
//         [ln y - psi(n+1) - psi(n+2) + psi(a+n+1) + psi(b+n+1)],   y = 1 - x.
inline double hyp2f1_connection(double a, double b, double c, double x) {
  const double y = 1.0 - x;
  const double ly = std::log(y);
  // Gamma ratios in log space; the parameters can be in the thousands.
  auto ratio = [](double c_, double u, double v) {
    const SignedLog gc = log_abs_gamma(c_), gu = log_abs_gamma(u), gv = log_abs_gamma(v);
    return gc.sign * gu.sign * gv.sign * std::exp(gc.log - gu.log - gv.log);
  };
  const double lead = ratio(c, a + 1.0, b + 1.0);
  const double pref = ratio(c, a, b);

  double psi_n1 = -std::numbers::egamma; // psi(n+1)
  double psi_a = digamma(a + 1.0);       // psi(a+n+1)
  double psi_b = digamma(b + 1.0);       // psi(b+n+1)
  long double term = 1.0L, sum = 0.0L;
  int quiet = 0;
  for (long n = 0; n < kMaxTerms; ++n) {
    const double psi_n2 = psi_n1 + 1.0 / (n + 1.0);
    const long double contrib = term * (ly - psi_n1 - psi_n2 + psi_a + psi_b);
    sum += contrib;
    if (n > 2 && std::abs(contrib) <= 1e-19L * std::abs(sum)) {
      if (++quiet >= 3) return lead + static_cast<double>(pref * y * sum);
    } else {
      quiet = 0;
    }
    term *= (static_cast<long double>(a) + 1 + n) * (static_cast<long double>(b) + 1 + n) /
            ((n + 1.0L) * (n + 2.0L)) * y;
    psi_n1 = psi_n2;
    psi_a += 1.0 / (a + 1.0 + n);
    psi_b += 1.0 / (b + 1.0 + n);
  }
  throw numeric_error("hyp2f1: connection series did not converge within term cap");
}

} // namespace detail

/**
 * Gauss hypergeometric function F(a, b; c; x) on 0 <= x < 1 for the
 * logarithmic boundary class c - a - b = 1, the only class the coefficient
 * formulas produce.  Terminating cases are summed directly; otherwise the power
 * series is used for x <= kSeriesSwitch and the expansion about x = 1 beyond.
 */
inline double hyp2f1_boundary(double a, double b, double c, double x) {
  if (std::abs(c - a - b - 1.0) > 1e-12 * std::max(1.0, std::abs(c)))
    throw std::invalid_argument("hyp2f1_boundary: requires c - a - b = 1");
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("hyp2f1_boundary: x must lie in [0, 1)");
  if (detail::is_nonpositive_integer(c)) throw std::domain_error("hyp2f1_boundary: c is a nonpositive integer");
  if (x == 0.0) return 1.0;
  if (detail::is_nonpositive_integer(a) || detail::is_nonpositive_integer(b))
    return detail::hyp2f1_terminating(a, b, c, x);
  const double big = std::max(std::abs(a), std::abs(b));
  if (x <= kSeriesSwitch || big * (1.0 - x) > kConnectionParamLimit) return detail::hyp2f1_series(a, b, c, x);
  return detail::hyp2f1_connection(a, b, c, x);
}

/// Degree up to which Jacobi polynomials are summed explicitly.
inline constexpr int kJacobiDirectDegree = 16;

namespace detail {

// (c)_m F(-m, b; c; u) / m! with the Pochhammer prefactor folded into each
// term, so c may be a nonpositive integer.  This is P_m^{(alpha,beta)}(1-2u)
// with c = alpha + 1 and b = m + alpha + beta + 1.
inline double jacobi_direct(int m, double alpha, double beta, double x) {
  const long double u = (1.0L - x) / 2.0L;
  const long double b = static_cast<long double>(m) + alpha + beta + 1.0L;
  long double sum = 0.0L;
  long double binom = 1.0L; // C(m, k)
  long double upow = 1.0L;  // u^k
  long double bpoch = 1.0L; // (b)_k
  long double mfact = 1.0L;
  for (int k = 1; k <= m; ++k) mfact *= k;
  for (int k = 0; k <= m; ++k) {
    long double tail = 1.0L; // (alpha + 1 + k)_{m-k}
    for (int i = 0; i < m - k; ++i) tail *= alpha + 1.0L + k + i;
    const long double sign = (k % 2 == 0) ? 1.0L : -1.0L;
    // (-m)_k / k! = (-1)^k C(m, k)
    sum += sign * binom * bpoch * tail * upow;
    binom = binom * (m - k) / (k + 1);
    bpoch *= b + k;
    upow *= u;
  }
  return static_cast<double>(sum / mfact);
}

inline double jacobi_recurrence(int m, double alpha, double beta, double x) {
  double p_prev = 1.0;
  double p_cur = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0;
  for (int k = 1; k < m; ++k) {
    const double s = 2.0 * k + alpha + beta;
    const double a1 = 2.0 * (k + 1) * (k + alpha + beta + 1.0) * s;
    const double a2 = (s + 1.0) * (alpha * alpha - beta * beta);
    const double a3 = s * (s + 1.0) * (s + 2.0);
    const double a4 = 2.0 * (k + alpha) * (k + beta) * (s + 2.0);
    const double p_next = ((a2 + a3 * x) * p_cur - a4 * p_prev) / a1;
    p_prev = p_cur;
    p_cur = p_next;
  }
  return p_cur;
}

} // namespace detail

/**
 * Jacobi polynomial P_m^{(alpha,beta)}(x).
 *
 * Low degrees use the explicit hypergeometric sum.  Higher degrees use the
 * three-term recurrence, except at beta = -1 where the recurrence is singular;
 * there P_m^{(a,-1)}(x) = (m+a)/m (1+x)/2 P_{m-1}^{(a,1)}(x) moves the
 * evaluation to beta = 1 first.
 */
inline double jacobi_poly(int m, double alpha, double beta, double x) {
  if (m < 0) throw std::invalid_argument("jacobi_poly: degree must be nonnegative");
  if (m == 0) return 1.0;
  if (m <= kJacobiDirectDegree) return detail::jacobi_direct(m, alpha, beta, x);
  if (beta == -1.0) return (m + alpha) / m * (1.0 + x) / 2.0 * jacobi_poly(m - 1, alpha, 1.0, x);
  // The recurrence divides by (k+alpha+beta+1)(2k+alpha+beta); fall back when
  // any of those vanish.
  for (int k = 1; k < m; ++k) {
    const double s = 2.0 * k + alpha + beta;
    if (s == 0.0 || k + alpha + beta + 1.0 == 0.0) return detail::jacobi_direct(m, alpha, beta, x);
  }
  return detail::jacobi_recurrence(m, alpha, beta, x);
}

/// Complete elliptic integral of the first kind K(k), modulus k in [0, 1).
inline double elliptic_K(double k) {
  k = std::abs(k);
  if (!(k < 1.0)) throw std::domain_error("elliptic_K: modulus must satisfy |k| < 1");
  double a = 1.0, b = std::sqrt((1.0 - k) * (1.0 + k));
  for (int it = 0; it < 64 && std::abs(a - b) > 4.0 * std::numeric_limits<double>::epsilon() * a; ++it) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return std::numbers::pi / (2.0 * a);
}

/// Complete elliptic integral of the second kind E(k), modulus k in [0, 1].
inline double elliptic_E(double k) {
  k = std::abs(k);
  if (k > 1.0) throw std::domain_error("elliptic_E: modulus must satisfy |k| <= 1");
  if (k == 1.0) return 1.0;
  double a = 1.0, b = std::sqrt((1.0 - k) * (1.0 + k));
  double sum = 0.5 * k * k; // 2^{-1} c_0^2
  double weight = 0.5;
  for (int it = 0; it < 64 && std::abs(a - b) > 4.0 * std::numeric_limits<double>::epsilon() * a; ++it) {
    const double c = 0.5 * (a - b);
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
    weight *= 2.0;
    sum += weight * c * c;
  }
  return std::numbers::pi / (2.0 * a) * (1.0 - sum);
}

} // namespace cavity::specfun
