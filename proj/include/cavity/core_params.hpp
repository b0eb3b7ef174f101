#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cavity {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s
inline constexpr double kRegimeTolerance = 1e-9;
// Below this value of a*tau the hyperbolic/trigonometric quotient switches to
// its Taylor series.
inline constexpr double kSmallArgument = 1e-4;

enum class Regime { below, critical, above };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::below: return "below";
    case Regime::critical: return "critical";
    case Regime::above: return "above";
  }
  return "?";
}

/// Problem definition.  epsilon and L0 only enter the conversion to laboratory
/// units; everything else is expressed in the slow time tau.
struct ResonanceConfig {
  int p = 2;
  double gamma = 0.0;
  double epsilon = 1e-8;
  double L0 = 0.03;
  std::vector<double> tau_grid{0.0};

  int sigma() const { return (p % 2 == 0) ? 1 : -1; }

  void validate() const {
    if (p < 1) throw std::invalid_argument("p must be a positive integer");
    if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(L0 > 0.0)) throw std::invalid_argument("L0 must be positive");
    if (tau_grid.empty()) throw std::invalid_argument("tau grid is empty");
    if (!(tau_grid.front() >= 0.0)) throw std::invalid_argument("tau grid must start at a value >= 0");
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
      if (!(tau_grid[i] > tau_grid[i - 1])) throw std::invalid_argument("tau grid must be strictly increasing");
  }
};

inline Regime regime_of(double gamma, double tol = kRegimeTolerance) {
  const double g = std::abs(gamma);
  if (g < 1.0 - tol) return Regime::below;
  if (g > 1.0 + tol) return Regime::above;
  return Regime::critical;
}

/// Auxiliary functions at one value x of their argument.  Coefficient formulas
/// for resonance p evaluate these at x = p*tau.
struct KinPoint {
  double x = 0.0;
  double gamma = 0.0;
  double S = 0.0;     // sinh(a x)/a, x, or sin(a~ x)/a~
  double C = 1.0;     // cosh(a x), 1, or cos(a~ x)
  cplx g{1.0, 0.0};   // C + i gamma S
  double gg = 1.0;    // |g|^2 = 1 + S^2
  double kappa = 0.0; // S/|g|
  double theta = 0.0; // arg g, continuous in x
  cplx lambda{1.0, 0.0};

  /// lambda^e on the branch that is continuous from lambda(0) = 1.
  cplx lambda_pow(double e) const { return std::polar(1.0, theta * e); }
  double kappa_tilde() const { return std::sqrt(1.0 / gg); }
};

class Kinematics {
 public:
  explicit Kinematics(double gamma, double tol = kRegimeTolerance)
      : gamma_(gamma), regime_(regime_of(gamma, tol)) {
    if (regime_ == Regime::below) a_ = std::sqrt((1.0 - gamma) * (1.0 + gamma));
    if (regime_ == Regime::above) a_tilde_ = std::sqrt((std::abs(gamma) - 1.0) * (std::abs(gamma) + 1.0));
  }

  Regime regime() const { return regime_; }
  double gamma() const { return gamma_; }
  double a() const { return a_; }
  double a_tilde() const { return a_tilde_; }

  /// S(x) = sinh(ax)/a (or its limits); the energy formula needs it alone.
  double S(double x) const { return sc(x).first; }

  KinPoint at(double x) const {
    if (!(x >= 0.0)) throw std::domain_error("kinematics: argument must be nonnegative");
    KinPoint k;
    k.x = x;
    k.gamma = gamma_;
    const auto [S, C] = sc(x);
    k.S = S;
    k.C = C;
    k.g = cplx(C, gamma_ * S);
    k.gg = C * C + gamma_ * gamma_ * S * S;
    const double mod = std::sqrt(k.gg);
    k.kappa = S / mod;
    const double base = std::atan2(gamma_ * S, C);
    if (regime_ == Regime::above) {
      // The point g winds around the origin once per period 2 pi / a~ and
      // stays within a quarter turn of the angle sign(gamma) a~ x.
      const double ref = (gamma_ >= 0.0 ? 1.0 : -1.0) * a_tilde_ * x;
      k.theta = base + 2.0 * std::numbers::pi * std::round((ref - base) / (2.0 * std::numbers::pi));
    } else {
      k.theta = base;
    }
    k.lambda = k.g / mod;
    return k;
  }

 private:
  std::pair<double, double> sc(double x) const {
    switch (regime_) {
      case Regime::below: {
        const double ax = a_ * x;
        if (ax < kSmallArgument) {
          const double ax2 = ax * ax;
          return {x * (1.0 + ax2 / 6.0 + ax2 * ax2 / 120.0), 1.0 + ax2 / 2.0 + ax2 * ax2 / 24.0};
        }
        return {std::sinh(ax) / a_, std::cosh(ax)};
      }
      case Regime::critical: return {x, 1.0};
      case Regime::above: {
        const double ax = a_tilde_ * x;
        if (ax < kSmallArgument) {
          const double ax2 = ax * ax;
          return {x * (1.0 - ax2 / 6.0 + ax2 * ax2 / 120.0), 1.0 - ax2 / 2.0 + ax2 * ax2 / 24.0};
        }
        return {std::sin(ax) / a_tilde_, std::cos(ax)};
      }
    }
    return {0.0, 1.0};
  }

  double gamma_;
  Regime regime_;
  double a_ = 0.0;
  double a_tilde_ = 0.0;
};

/// Kinematic functions at slow time tau (argument x = tau, not p*tau).
inline KinPoint kinematics_eval(const ResonanceConfig& cfg, double tau) { return Kinematics(cfg.gamma).at(tau); }

/// Converts a rate per unit slow time into photons per second
/// (d tau / dt = epsilon * omega_1 / 2 with omega_1 = pi c / L0).
inline double to_lab_units(const ResonanceConfig& cfg, double rate_per_tau) {
  return rate_per_tau * cfg.epsilon * std::numbers::pi * kSpeedOfLight / (2.0 * cfg.L0);
}

} // namespace cavity
