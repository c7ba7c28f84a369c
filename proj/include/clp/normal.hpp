#pragma once

// Standard normal density/CDF helpers that stay finite far into the tails.

#include <cmath>
#include <numbers>

namespace clp::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

inline double log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

inline double pdf(double x) { return std::exp(log_pdf(x)); }

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// log Phi(x), accurate for both tails.
inline double log_cdf(double x) {
  if (x >= 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -35.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Mills-ratio asymptotic series; relative error < 1e-16 for x <= -35.
  const double z2 = 1.0 / (x * x);
  const double series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
  return log_pdf(x) - std::log(-x) + std::log(series);
}

/// Inverse Mills ratio phi(x) / Phi(x). Tends to -x as x -> -inf.
inline double mills(double x) { return std::exp(log_pdf(x) - log_cdf(x)); }

/// d/dx of mills(x); always negative.
inline double mills_deriv(double x) {
  const double lam = mills(x);
  return -lam * (x + lam);
}

/// d^2/dx^2 of mills(x), i.e. the third derivative of log Phi.
inline double mills_deriv2(double x) {
  const double lam = mills(x);
  const double dlam = -lam * (x + lam);
  return -dlam * (x + lam) - lam * (1.0 + dlam);
}

}  // namespace clp::normal
