#pragma once

// Marginal and k-wise composite log-likelihoods of the random-intercept
// probit model, their scores, and maximisers.
//
// Responses in a cluster are exchangeable given the linear predictor, so
// every quantity depends on a cluster only through (x, s, m). The random
// effect integral is split at the posterior mode of the linear predictor and
// each half is integrated by a half-range Gauss-Hermite rule scaled to the
// width of the posterior on that side.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clp/error.hpp"
#include "clp/kernel.hpp"
#include "clp/model.hpp"
#include "clp/normal.hpp"
#include "clp/optim.hpp"
#include "clp/quadrature.hpp"

namespace clp {

/// Log-likelihood of one (x, s, m) pattern and its gradient in (alpha, beta, sigma).
struct CountTerm {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
};

/// Binomial coefficient as a double; exact while it fits in 53 bits.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c < 9.0e15 ? std::round(c) : c;
}

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline CountTerm count_term(const Params& p, int s, int m, double x, const LikelihoodRule& rule) {
  CountTerm out;
  const double mu = p.linear_predictor(x);
  if (p.sigma == 0.0) {
    const PosteriorKernel k{s, m, mu, 1.0};
    out.value = k.log_response(mu);
    const double d = k.response_gradient(mu);
    out.grad << d, d * x, 0.0;
    if (!std::isfinite(out.value)) throw Error(ErrorCode::NonFinite, "degenerate log-likelihood not finite");
    return out;
  }

  const PosteriorKernel k{s, m, mu, p.sigma};
  const KernelMode mode = find_mode(k);

  // Each half-line from the mode gets its own scale: the distance at which
  // log g has fallen by 4.5, i.e. three standard deviations for a Gaussian.
  constexpr double kDrop = 4.5, kZ = 3.0;
  const double tau[2] = {drop_distance(k, mode, -1, kDrop) / kZ, drop_distance(k, mode, +1, kDrop) / kZ};

  // log of each node's contribution to the integral over eta.
  const QuadratureRule& half = rule.half;
  const std::size_t n = half.nodes.size();
  double terms_buf[kMaxHermiteOrder];
  double etas_buf[kMaxHermiteOrder];
  const double log_norm = 0.5 * std::log(0.5 * std::numbers::pi);
  double peak = -std::numeric_limits<double>::infinity();
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? -1.0 : 1.0;
    const double log_tau = std::log(tau[side]);
    for (std::size_t j = 0; j < n; ++j) {
      const double u = half.nodes[j];
      const double eta = mode.eta_hat + dir * tau[side] * u;
      const std::size_t idx = side * n + j;
      etas_buf[idx] = eta;
      terms_buf[idx] = std::log(half.weights[j]) + k.log_g(eta) + 0.5 * u * u + log_tau + log_norm;
      peak = std::max(peak, terms_buf[idx]);
    }
  }
  double total = 0.0;
  for (std::size_t j = 0; j < 2 * n; ++j) total += std::exp(terms_buf[j] - peak);
  out.value = peak + std::log(total);
  if (!std::isfinite(out.value)) throw Error(ErrorCode::NonFinite, "cluster log-likelihood not finite");

  // Score = posterior expectation of the prior's score.
  const double var = p.sigma * p.sigma;
  double e_r = 0.0, e_r2 = 0.0;
  for (std::size_t j = 0; j < 2 * n; ++j) {
    const double w = std::exp(terms_buf[j] - peak) / total;
    const double r = etas_buf[j] - mu;
    e_r += w * r;
    e_r2 += w * r * r;
  }
  out.grad << e_r / var, x * e_r / var, -1.0 / p.sigma + e_r2 / (var * p.sigma);
  return out;
}

/// Sum over all size-k sub-vectors of a (x, s, m) cluster, grouped by the
/// number j of successes in the sub-vector.
inline CountTerm composite_count_term(const Params& p, int s, int m, double x, int k, const LikelihoodRule& rule) {
  if (k < 1 || k > m) throw Error(ErrorCode::SubsetTooLarge, "subset size k must satisfy 1 <= k <= m");
  CountTerm out;
  for (int j = std::max(0, k - (m - s)); j <= std::min(s, k); ++j) {
    const double mult = binomial(s, j) * binomial(m - s, k - j);
    const CountTerm t = count_term(p, j, k, x, rule);
    out.value += mult * t.value;
    out.grad += mult * t.grad;
  }
  return out;
}

inline double cluster_loglik(const Params& p, const ClusterData& c, const LikelihoodRule& rule) {
  return count_term(p, c.s(), c.m(), c.x(), rule).value;
}

inline double composite_loglik(const Params& p, const ClusterData& c, const SubsetScheme& scheme,
                               const LikelihoodRule& rule) {
  if (scheme.k < 1 || scheme.k > c.m())
    throw Error(ErrorCode::SubsetTooLarge, "k = " + std::to_string(scheme.k) + " exceeds cluster size");
  return scheme.weight * composite_count_term(p, c.s(), c.m(), c.x(), scheme.k, rule).value;
}

// ---------------------------------------------------------------------------

/// Clusters of a common size m.
class Dataset {
 public:
  struct Pattern {
    double x;
    int s;
    long count;
  };

  explicit Dataset(std::vector<ClusterData> clusters) : clusters_(std::move(clusters)) {
    if (clusters_.empty()) throw Error(ErrorCode::InvalidDataset, "dataset has no clusters");
    m_ = clusters_.front().m();
    std::map<std::pair<double, int>, long> tally;
    for (const auto& c : clusters_) {
      if (c.m() != m_) throw Error(ErrorCode::InvalidDataset, "all clusters must have the same size");
      ++tally[{c.x(), c.s()}];
    }
    patterns_.reserve(tally.size());
    for (const auto& [key, count] : tally) patterns_.push_back({key.first, key.second, count});
  }

  const std::vector<ClusterData>& clusters() const { return clusters_; }
  int m() const { return m_; }
  std::size_t n() const { return clusters_.size(); }

  /// Distinct (x, s) patterns with multiplicities, ordered by (x, s).
  const std::vector<Pattern>& patterns() const { return patterns_; }

 private:
  std::vector<ClusterData> clusters_;
  int m_ = 0;
  std::vector<Pattern> patterns_;
};

namespace detail {

inline CountTerm dataset_term(const Params& p, const Dataset& data, const std::optional<SubsetScheme>& scheme,
                              const LikelihoodRule& rule) {
  validate(p);
  if (scheme && (scheme->k < 1 || scheme->k > data.m()))
    throw Error(ErrorCode::SubsetTooLarge, "k = " + std::to_string(scheme->k) + " exceeds cluster size");
  CountTerm total;
  for (const auto& pat : data.patterns()) {
    const CountTerm t = scheme ? composite_count_term(p, pat.s, data.m(), pat.x, scheme->k, rule)
                               : count_term(p, pat.s, data.m(), pat.x, rule);
    const double w = static_cast<double>(pat.count) * (scheme ? scheme->weight : 1.0);
    total.value += w * t.value;
    total.grad += w * t.grad;
  }
  return total;
}

inline Eigen::VectorXd free_components(const Params& p, const Eigen::Vector3d& grad) {
  if (p.sigma_mode.is_fixed()) return grad.head<2>();
  return grad;
}

}  // namespace detail

/// Full (no scheme) or composite log-likelihood of a dataset.
inline double total_loglik(const Params& p, const Dataset& data, const std::optional<SubsetScheme>& scheme,
                           const LikelihoodRule& rule) {
  return detail::dataset_term(p, data, scheme, rule).value;
}

/// Gradient of total_loglik in the free coordinates (alpha, beta[, sigma]).
inline Eigen::VectorXd score(const Params& p, const Dataset& data, const std::optional<SubsetScheme>& scheme,
                             const LikelihoodRule& rule) {
  if (!p.sigma_mode.is_fixed() && !(p.sigma > 0.0))
    throw Error(ErrorCode::BoundaryPoint, "score with free sigma needs sigma > 0");
  return detail::free_components(p, detail::dataset_term(p, data, scheme, rule).grad);
}

/// Score of a single cluster's full log-likelihood.
inline Eigen::VectorXd cluster_score(const Params& p, const ClusterData& c, const LikelihoodRule& rule) {
  if (!p.sigma_mode.is_fixed() && !(p.sigma > 0.0))
    throw Error(ErrorCode::BoundaryPoint, "score with free sigma needs sigma > 0");
  return detail::free_components(p, count_term(p, c.s(), c.m(), c.x(), rule).grad);
}

// ---------------------------------------------------------------------------
// Estimation

/// Optimiser coordinates: (alpha, beta) or (alpha, beta, log sigma).
inline Eigen::VectorXd to_internal(const Params& p) {
  Eigen::VectorXd z(p.n_free());
  z[0] = p.alpha;
  z[1] = p.beta;
  if (!p.sigma_mode.is_fixed()) z[2] = std::log(p.sigma);
  return z;
}

inline Params from_internal(const Eigen::VectorXd& z, const SigmaMode& mode) {
  if (mode.is_fixed()) return Params::fixed_sigma(z[0], z[1], *mode.fixed);
  return Params::free_sigma(z[0], z[1], std::exp(z[2]));
}

struct FitResult {
  Params params;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  bool multimodal = false;  // converged starts disagree by more than 1e-4
  bool boundary = false;    // separation in the data or estimates drifting off to infinity
};

struct FitOptions {
  int starts = 3;
  double gtol = 1e-8;
  int max_iter = 500;
  double multimodal_tol = 1e-4;
};

/// Probit fit ignoring the random effect, attenuated for a random effect
/// of SD `sigma`. Used as the default starting point.
inline Params default_init(const Dataset& data, const SigmaMode& mode, double sigma_init = 0.5) {
  const double sigma = mode.is_fixed() ? *mode.fixed : sigma_init;
  double a = 0.0, b = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    for (const auto& pat : data.patterns()) {
      const double eta = a + b * pat.x;
      const PosteriorKernel k{pat.s, data.m(), eta, 1.0};
      const double d = k.response_gradient(eta);
      const double c = -k.response_curvature(eta);
      const double w = static_cast<double>(pat.count);
      g += w * d * Eigen::Vector2d(1.0, pat.x);
      info += w * c * Eigen::Vector2d(1.0, pat.x) * Eigen::RowVector2d(1.0, pat.x);
    }
    info(0, 0) += 1e-8;
    info(1, 1) += 1e-6;
    const Eigen::Vector2d step = info.ldlt().solve(g);
    a = std::clamp(a + step[0], -8.0, 8.0);
    b = std::clamp(b + step[1], -8.0, 8.0);
    if (step.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  const double scale = std::sqrt(1.0 + sigma * sigma);
  return mode.is_fixed() ? Params::fixed_sigma(a * scale, b * scale, sigma)
                         : Params::free_sigma(a * scale, b * scale, sigma);
}

namespace detail {

// True when some covariate level has only successes or only failures.
inline bool separated(const Dataset& data) {
  std::map<double, std::pair<long, long>> by_x;  // successes, trials
  for (const auto& pat : data.patterns()) {
    auto& e = by_x[pat.x];
    e.first += pat.count * pat.s;
    e.second += pat.count * data.m();
  }
  for (const auto& [x, e] : by_x)
    if (e.first == 0 || e.first == e.second) return true;
  return false;
}

}  // namespace detail

/// Maximum (composite) likelihood fit from `init` plus perturbed restarts.
inline FitResult fit(const Dataset& data, const std::optional<SubsetScheme>& scheme, const Params& init,
                     const LikelihoodRule& rule, const FitOptions& options = {}) {
  validate(init);
  const SigmaMode mode = init.sigma_mode;
  if (!mode.is_fixed() && !(init.sigma > 0.0))
    throw Error(ErrorCode::BoundaryPoint, "free-sigma fit needs a starting sigma > 0");

  const optim::Objective objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    const Params p = from_internal(z, mode);
    const CountTerm t = detail::dataset_term(p, data, scheme, rule);
    g = -detail::free_components(p, t.grad);
    if (!mode.is_fixed()) g[2] *= p.sigma;
    return -t.value;
  };

  std::vector<Params> starts{init};
  if (options.starts > 1) {
    Params p = init;
    p.alpha *= 0.5;
    p.beta *= 0.5;
    if (!mode.is_fixed()) p.sigma *= 0.6;
    starts.push_back(p);
  }
  if (options.starts > 2) {
    Params p = init;
    p.alpha = 1.5 * p.alpha + 0.1;
    p.beta = 1.5 * p.beta - 0.1;
    if (!mode.is_fixed()) p.sigma *= 1.6;
    starts.push_back(p);
  }

  optim::Options opt;
  opt.gtol = options.gtol;
  opt.max_iter = options.max_iter;

  FitResult best;
  bool have = false;
  std::vector<double> converged_values;
  for (const auto& start : starts) {
    optim::Result r;
    try {
      r = optim::bfgs(objective, to_internal(start), opt);
    } catch (const Error&) {
      continue;
    }
    if (r.converged) converged_values.push_back(-r.f);
    if (!have || (r.converged && !best.converged) || (r.converged == best.converged && -r.f > best.objective)) {
      best.params = from_internal(r.x, mode);
      best.objective = -r.f;
      best.converged = r.converged;
      best.iterations = r.iterations;
      have = true;
    }
  }
  if (!have) throw Error(ErrorCode::SolverFailure, "no start produced a finite objective");
  if (converged_values.size() > 1) {
    const auto [lo, hi] = std::minmax_element(converged_values.begin(), converged_values.end());
    best.multimodal = (*hi - *lo) > options.multimodal_tol;
  }
  const auto& bp = best.params;
  best.boundary = detail::separated(data) || std::abs(bp.alpha) > 20.0 || std::abs(bp.beta) > 20.0 ||
                  (!mode.is_fixed() && (bp.sigma < 1e-4 || bp.sigma > 50.0));
  return best;
}

/// Fit from the default starting point.
inline FitResult fit(const Dataset& data, const std::optional<SubsetScheme>& scheme, const SigmaMode& mode,
                     const LikelihoodRule& rule, const FitOptions& options = {}) {
  return fit(data, scheme, default_init(data, mode), rule, options);
}

}  // namespace clp
