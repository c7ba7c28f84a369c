#pragma once

// Laplace approximation to a cluster's log-likelihood and the large-m
// comparison between the probit-model score and the score of a normal
// linear model for the (unobserved) true linear predictor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "clp/error.hpp"
#include "clp/kernel.hpp"
#include "clp/likelihood.hpp"
#include "clp/model.hpp"
#include "clp/quadrature.hpp"
#include "clp/rng.hpp"
#include "clp/truth.hpp"

namespace clp {

struct ProfilePoint {
  double eta_hat = 0.0;
  double neg_curvature = 0.0;  // -(d^2/d eta^2) log g at eta_hat
  int newton_iters = 0;
};

inline PosteriorKernel cluster_kernel(const Params& p, const ClusterData& c) {
  return {c.s(), c.m(), p.linear_predictor(c.x()), p.sigma};
}

/// Maximiser of the posterior kernel g(eta | y, theta).
inline ProfilePoint profile_eta(const Params& p, const ClusterData& c) {
  if (!(p.sigma > 0.0)) throw Error(ErrorCode::BoundaryPoint, "profile_eta needs sigma > 0");
  const KernelMode mode = find_mode(cluster_kernel(p, c));
  return {mode.eta_hat, mode.neg_curvature, mode.newton_iters};
}

/// log g(eta_hat) - log(-H)/2 + log(2 pi)/2, with H the curvature of log g.
inline double laplace_loglik(const Params& p, const ClusterData& c) {
  const ProfilePoint pp = profile_eta(p, c);
  return cluster_kernel(p, c).log_g(pp.eta_hat) - 0.5 * std::log(pp.neg_curvature) +
         0.5 * std::log(2.0 * std::numbers::pi);
}

/// Normal log-density of eta0 with mean alpha + beta x and SD sigma.
inline double linear_model_loglik(const Params& p, double eta0, double x) {
  const double r = eta0 - p.linear_predictor(x);
  return -0.5 * std::log(2.0 * std::numbers::pi * p.sigma * p.sigma) - 0.5 * r * r / (p.sigma * p.sigma);
}

/// Gradient of linear_model_loglik in the free coordinates of p.
inline Eigen::VectorXd linear_model_score(const Params& p, double eta0, double x) {
  if (!(p.sigma > 0.0)) throw Error(ErrorCode::BoundaryPoint, "linear_model_score needs sigma > 0");
  const double r = eta0 - p.linear_predictor(x);
  const double var = p.sigma * p.sigma;
  Eigen::Vector3d g(r / var, x * r / var, -1.0 / p.sigma + r * r / (var * p.sigma));
  return detail::free_components(p, g);
}

/// Ratio H_{theta2}(eta) / H_{theta1}(eta) of kernel curvatures.
inline double h_ratio(const Params& p1, const Params& p2, const ClusterData& c, double eta) {
  if (!(p1.sigma > 0.0) || !(p2.sigma > 0.0)) throw Error(ErrorCode::BoundaryPoint, "h_ratio needs sigma > 0");
  const double h1 = cluster_kernel(p1, c).curvature(eta);
  const double h2 = cluster_kernel(p2, c).curvature(eta);
  if (h1 == 0.0 || h2 == 0.0 || !std::isfinite(h1) || !std::isfinite(h2))
    throw Error(ErrorCode::ZeroCurvature, "kernel curvature vanished at eta");
  return h2 / h1;
}

// ---------------------------------------------------------------------------
// Simulation tables

struct GapRow {
  int m = 0;
  double median = 0.0;
  double p90 = 0.0;
  int n_rep = 0;
  std::uint64_t seed = 0;
};

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// One simulated cluster with its true linear predictor. Replicate r draws
/// (x, b) from stream (seed, r), shared across m, so clusters are matched
/// over m; the responses come from stream (seed, r, m).
struct LatentCluster {
  double x;
  double eta0;
  ClusterData cluster;
};

inline LatentCluster simulate_matched_cluster(const Truth& truth, int m, std::uint64_t seed, int rep) {
  Engine latent = make_engine(seed, {static_cast<std::uint64_t>(rep)});
  const double x = draw_covariate(truth.cov, latent);
  const double eta0 = truth.eta0(x, draw_effect(truth.law, latent));
  Engine resp = make_engine(seed, {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(m)});
  return {x, eta0, ClusterData(x, draw_responses(eta0, m, resp))};
}

/// Distribution over simulated clusters of || u(theta; y) - u(theta; eta0) ||.
inline std::vector<GapRow> lemma1_gap(const Params& theta, const Truth& truth, const std::vector<int>& m_values,
                                      int n_rep, std::uint64_t seed,
                                      const LikelihoodRule& rule = likelihood_rule_cached(kDefaultLikelihoodOrder)) {
  validate(theta);
  if (n_rep < 1) throw Error(ErrorCode::ConfigError, "n_rep must be >= 1");
  std::vector<GapRow> rows;
  for (int m : m_values) {
    if (m < 1) throw Error(ErrorCode::ConfigError, "m must be >= 1");
    std::vector<double> gaps;
    gaps.reserve(static_cast<std::size_t>(n_rep));
    for (int r = 0; r < n_rep; ++r) {
      const LatentCluster lc = simulate_matched_cluster(truth, m, seed, r);
      const Eigen::VectorXd u_y = cluster_score(theta, lc.cluster, rule);
      const Eigen::VectorXd u_eta = linear_model_score(theta, lc.eta0, lc.x);
      gaps.push_back((u_y - u_eta).norm());
    }
    rows.push_back({m, quantile(gaps, 0.5), quantile(gaps, 0.9), n_rep, seed});
  }
  return rows;
}

/// Distribution of |laplace_loglik - quadrature cluster_loglik| over matched clusters.
inline std::vector<GapRow> laplace_error(const Params& theta, const Truth& truth, const std::vector<int>& m_values,
                                         int n_rep, std::uint64_t seed,
                                         const LikelihoodRule& rule = likelihood_rule_cached(kDefaultLikelihoodOrder)) {
  validate(theta);
  if (n_rep < 1) throw Error(ErrorCode::ConfigError, "n_rep must be >= 1");
  std::vector<GapRow> rows;
  for (int m : m_values) {
    if (m < 1) throw Error(ErrorCode::ConfigError, "m must be >= 1");
    std::vector<double> errs;
    for (int r = 0; r < n_rep; ++r) {
      const LatentCluster lc = simulate_matched_cluster(truth, m, seed, r);
      errs.push_back(std::abs(laplace_loglik(theta, lc.cluster) - cluster_loglik(theta, lc.cluster, rule)));
    }
    rows.push_back({m, quantile(errs, 0.5), quantile(errs, 0.9), n_rep, seed});
  }
  return rows;
}

}  // namespace clp
