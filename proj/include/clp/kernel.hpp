#pragma once

// The non-normalised posterior kernel of the linear predictor for a cluster
// with s successes out of m under prior N(mu, sigma^2):
//
//   log g(eta) = s log Phi(eta) + (m - s) log Phi(-eta) + log phi_sigma(eta - mu)
//
// It is strictly log-concave, so its mode is unique.

#include <algorithm>
#include <cmath>
#include <limits>

#include "clp/error.hpp"
#include "clp/normal.hpp"

namespace clp {

struct PosteriorKernel {
  int s = 0;
  int m = 1;
  double mu = 0.0;
  double sigma = 1.0;

  /// Log-likelihood of the responses given eta (no prior term).
  double log_response(double eta) const {
    double v = 0.0;
    if (s > 0) v += s * normal::log_cdf(eta);
    if (m > s) v += (m - s) * normal::log_cdf(-eta);
    return v;
  }

  double log_prior(double eta) const {
    const double r = (eta - mu) / sigma;
    return -0.5 * r * r - normal::kLogSqrt2Pi - std::log(sigma);
  }

  double log_g(double eta) const { return log_response(eta) + log_prior(eta); }

  double response_gradient(double eta) const {
    double d = 0.0;
    if (s > 0) d += s * normal::mills(eta);
    if (m > s) d -= (m - s) * normal::mills(-eta);
    return d;
  }

  double response_curvature(double eta) const {
    double c = 0.0;
    if (s > 0) c += s * normal::mills_deriv(eta);
    if (m > s) c += (m - s) * normal::mills_deriv(-eta);
    return c;
  }

  double gradient(double eta) const { return response_gradient(eta) - (eta - mu) / (sigma * sigma); }

  /// Second derivative of log g; strictly negative.
  double curvature(double eta) const { return response_curvature(eta) - 1.0 / (sigma * sigma); }
};

struct KernelMode {
  double eta_hat = 0.0;
  double neg_curvature = 0.0;
  int newton_iters = 0;
  bool used_bisection = false;
};

/// Mode of a posterior kernel by safeguarded Newton; steps that leave the
/// current bracket are replaced by bisection. Requires sigma > 0.
inline KernelMode find_mode(const PosteriorKernel& k, double tol = 1e-10) {
  if (!(k.sigma > 0.0)) throw Error(ErrorCode::BoundaryPoint, "posterior mode needs sigma > 0");
  KernelMode out;

  // Bracket the root of the gradient. The gradient is decreasing.
  double eta = k.mu;
  double g = k.gradient(eta);
  double lo = eta, hi = eta;
  double step = std::max(1.0, k.sigma);
  if (g > 0.0) {
    while (k.gradient(hi) > 0.0) {
      lo = hi;
      hi += step;
      step *= 2.0;
    }
  } else {
    while (k.gradient(lo) < 0.0) {
      hi = lo;
      lo -= step;
      step *= 2.0;
    }
  }

  for (int it = 0; it < 200; ++it) {
    out.newton_iters = it;
    g = k.gradient(eta);
    if (std::abs(g) < tol) break;
    if (g > 0.0)
      lo = eta;
    else
      hi = eta;
    const double h = k.curvature(eta);
    double next = eta - g / h;
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      next = 0.5 * (lo + hi);
      out.used_bisection = true;
    }
    if (next == eta) break;
    eta = next;
  }
  out.eta_hat = eta;
  out.neg_curvature = -k.curvature(eta);
  if (!(out.neg_curvature > 0.0) || !std::isfinite(out.neg_curvature))
    throw Error(ErrorCode::NonFinite, "non-positive curvature at posterior mode");
  return out;
}

/// Distance t > 0 from the mode at which log g has fallen by `drop`, going
/// left (dir = -1) or right (dir = +1). log g is concave, so the fall is a
/// convex increasing function of t and safeguarded Newton converges.
inline double drop_distance(const PosteriorKernel& k, const KernelMode& mode, int dir, double drop) {
  const double top = k.log_g(mode.eta_hat);
  const auto fall = [&](double t) { return top - k.log_g(mode.eta_hat + dir * t) - drop; };
  double lo = 0.0, hi = std::sqrt(2.0 * drop / mode.neg_curvature);
  while (fall(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  double t = hi;
  for (int it = 0; it < 60; ++it) {
    const double f = fall(t);
    if (std::abs(f) < 1e-9 * drop) break;
    if (f > 0.0)
      hi = t;
    else
      lo = t;
    const double slope = -dir * k.gradient(mode.eta_hat + dir * t);
    double next = slope > 0.0 ? t - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return t;
}

}  // namespace clp
