#pragma once

// Pseudo-true limits of the full and k-wise composite likelihood estimators:
// maximisers over theta of E{ l(theta; Y) } with the expectation taken under
// the true data-generating process. The expectation over responses is an
// exact sum over success counts; the expectation over the random effect is
// deterministic quadrature. No sampling happens here.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "clp/error.hpp"
#include "clp/likelihood.hpp"
#include "clp/model.hpp"
#include "clp/optim.hpp"
#include "clp/quadrature.hpp"
#include "clp/truth.hpp"

namespace clp {

struct QuadratureOrders {
  int likelihood = kDefaultLikelihoodOrder;  // inner random-effect integral of the fitted model
  int truth = kDefaultTruthOrder;            // outer expectation over the true random effect
};

/// P(S = s | x) for S the success count of a size-m cluster under the truth.
inline std::vector<double> count_probabilities(const Truth& truth, double x, int m, const LawRule& law) {
  std::vector<double> probs(static_cast<std::size_t>(m + 1), 0.0);
  for (std::size_t i = 0; i < law.points.size(); ++i) {
    const double eta = truth.eta0(x, law.points[i]);
    const double lp = normal::log_cdf(eta), lq = normal::log_cdf(-eta);
    for (int s = 0; s <= m; ++s)
      probs[static_cast<std::size_t>(s)] += law.weights[i] * std::exp(log_binomial(m, s) + s * lp + (m - s) * lq);
  }
  for (double v : probs)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite count probability");
  return probs;
}

/// E{ l(theta; Y) } for clusters of size m under a truth, as a reusable
/// function of theta. For a k-wise scheme the objective is C(m, k) times the
/// expected full log-likelihood of a size-k cluster.
class ExpectedObjective {
 public:
  ExpectedObjective(const Truth& truth, int m, const std::optional<SubsetScheme>& scheme,
                    const QuadratureOrders& orders = {})
      : rule_(&likelihood_rule_cached(orders.likelihood)) {
    if (m < 1) throw Error(ErrorCode::ConfigError, "cluster size m must be >= 1");
    if (scheme) {
      if (scheme->k < 1 || scheme->k > m) throw Error(ErrorCode::SubsetTooLarge, "k must satisfy 1 <= k <= m");
      size_ = scheme->k;
      multiplier_ = binomial(m, scheme->k) * scheme->weight;
    } else {
      size_ = m;
    }
    const LawRule law = law_rule(truth.law, gh_rule_cached(orders.truth));
    for (const auto& pt : truth.cov.support())
      levels_.push_back({pt.x, pt.prob, count_probabilities(truth, pt.x, size_, law)});
  }

  CountTerm evaluate(const Params& p) const {
    CountTerm out;
    for (const auto& lvl : levels_) {
      for (int s = 0; s <= size_; ++s) {
        const double w = lvl.prob * lvl.counts[static_cast<std::size_t>(s)];
        if (w == 0.0) continue;
        const CountTerm t = count_term(p, s, size_, lvl.x, *rule_);
        out.value += w * t.value;
        out.grad += w * t.grad;
      }
    }
    out.value *= multiplier_;
    out.grad *= multiplier_;
    return out;
  }

  double value(const Params& p) const { return evaluate(p).value; }

  /// Gradient in the free coordinates of p.
  Eigen::VectorXd gradient(const Params& p) const { return detail::free_components(p, evaluate(p).grad); }

  int component_size() const { return size_; }
  double multiplier() const { return multiplier_; }

 private:
  struct Level {
    double x;
    double prob;
    std::vector<double> counts;
  };
  const LikelihoodRule* rule_;
  int size_ = 1;
  double multiplier_ = 1.0;
  std::vector<Level> levels_;
};

inline double expected_loglik(const Params& fit_params, const Truth& truth, int m,
                              const std::optional<SubsetScheme>& scheme, const QuadratureOrders& orders = {}) {
  validate(fit_params);
  return ExpectedObjective(truth, m, scheme, orders).value(fit_params);
}

struct LimitResult {
  Params params;
  double score_norm = std::numeric_limits<double>::quiet_NaN();  // inf-norm of the expected score
  int iterations = 0;
  bool ok = false;
};

inline constexpr double kLimitScoreTol = 1e-8;

/// Maximiser of an expected objective starting from `start` (whose sigma mode
/// decides which coordinates are free).
inline LimitResult maximise_expected(const ExpectedObjective& obj, const Params& start) {
  const SigmaMode mode = start.sigma_mode;
  const optim::Objective f = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    const Params p = from_internal(z, mode);
    const CountTerm t = obj.evaluate(p);
    g = -detail::free_components(p, t.grad);
    if (!mode.is_fixed()) g[2] *= p.sigma;
    return -t.value;
  };
  optim::Options opt;
  opt.gtol = 1e-11;
  opt.max_iter = 500;
  LimitResult out;
  const optim::Result r = optim::bfgs(f, to_internal(start), opt);
  out.params = from_internal(r.x, mode);
  out.iterations = r.iterations;
  out.score_norm = obj.gradient(out.params).lpNorm<Eigen::Infinity>();
  out.ok = std::isfinite(out.score_norm) && out.score_norm < kLimitScoreTol;
  return out;
}

inline Params limit_start(const Truth& truth, double sigma_tilde) {
  return Params::fixed_sigma(truth.params0.alpha, truth.params0.beta, sigma_tilde);
}

inline LimitResult solve_limit_detailed(const Truth& truth, int m, double sigma_tilde,
                                        const std::optional<SubsetScheme>& scheme = std::nullopt,
                                        const QuadratureOrders& orders = {},
                                        const std::optional<Params>& warm_start = std::nullopt) {
  if (!(sigma_tilde > 0.0)) throw Error(ErrorCode::ConfigError, "sigma_tilde must be > 0");
  const ExpectedObjective obj(truth, m, scheme, orders);
  Params start = warm_start.value_or(limit_start(truth, sigma_tilde));
  start.sigma = sigma_tilde;
  start.sigma_mode = SigmaMode::fixed_at(sigma_tilde);
  LimitResult r = maximise_expected(obj, start);
  if (!r.ok && warm_start) r = maximise_expected(obj, limit_start(truth, sigma_tilde));
  return r;
}

/// Pseudo-true (alpha, beta) with sigma fixed at sigma_tilde.
inline Params solve_limit(const Truth& truth, int m, double sigma_tilde,
                          const std::optional<SubsetScheme>& scheme = std::nullopt,
                          const QuadratureOrders& orders = {}) {
  const LimitResult r = solve_limit_detailed(truth, m, sigma_tilde, scheme, orders);
  if (!r.ok)
    throw Error(ErrorCode::SolverFailure, "expected score norm " + std::to_string(r.score_norm) + " at m = " +
                                              std::to_string(m) + ", sigma_tilde = " + std::to_string(sigma_tilde));
  return r.params;
}

/// Pseudo-true (alpha, beta, sigma) when sigma is estimated too.
inline LimitResult solve_limit_free_sigma(const Truth& truth, int m,
                                          const std::optional<SubsetScheme>& scheme = std::nullopt,
                                          const QuadratureOrders& orders = {}) {
  const ExpectedObjective obj(truth, m, scheme, orders);
  const Params start = Params::free_sigma(truth.params0.alpha, truth.params0.beta, truth.params0.sigma);
  return maximise_expected(obj, start);
}

/// Limit of the k-wise composite estimator: the full-likelihood limit at m = k.
inline Params kwise_limit(const Truth& truth, int k, double sigma_tilde, const QuadratureOrders& orders = {}) {
  if (k < 1) throw Error(ErrorCode::ConfigError, "k must be >= 1");
  return solve_limit(truth, k, sigma_tilde, std::nullopt, orders);
}

// ---------------------------------------------------------------------------

struct LimitSurface {
  std::vector<int> m_values;
  std::vector<double> sigma_tilde_values;
  // Indexed [m index][sigma_tilde index].
  std::vector<std::vector<Params>> limits;
  std::vector<std::vector<double>> residual_score_norm;
  std::vector<std::vector<bool>> failed;

  std::size_t failed_cells() const {
    std::size_t n = 0;
    for (const auto& row : failed)
      for (bool f : row) n += f ? 1 : 0;
    return n;
  }
};

struct LimitRow {
  std::vector<Params> limits;
  std::vector<double> score_norm;
  std::vector<bool> failed;
};

/// Limits along sigma_tilde for one m, each cell warm-started from the last
/// successful one.
inline LimitRow limit_row(const Truth& truth, int m, const std::vector<double>& sigma_tilde_values,
                          const QuadratureOrders& orders = {}) {
  LimitRow row;
  std::optional<Params> warm;
  for (double st : sigma_tilde_values) {
    LimitResult r;
    try {
      r = solve_limit_detailed(truth, m, st, std::nullopt, orders, warm);
    } catch (const Error&) {
      r.ok = false;
      r.params = limit_start(truth, st);
    }
    row.limits.push_back(r.params);
    row.score_norm.push_back(r.score_norm);
    row.failed.push_back(!r.ok);
    if (r.ok) warm = r.params;
  }
  return row;
}

inline LimitSurface limit_surface(const Truth& truth, const std::vector<int>& m_values,
                                  const std::vector<double>& sigma_tilde_values, const QuadratureOrders& orders = {}) {
  if (m_values.empty() || sigma_tilde_values.empty())
    throw Error(ErrorCode::ConfigError, "limit surface needs nonempty m and sigma_tilde grids");
  LimitSurface out;
  out.m_values = m_values;
  out.sigma_tilde_values = sigma_tilde_values;
  for (int m : m_values) {
    LimitRow row = limit_row(truth, m, sigma_tilde_values, orders);
    out.limits.push_back(std::move(row.limits));
    out.residual_score_norm.push_back(std::move(row.score_norm));
    out.failed.push_back(std::move(row.failed));
  }
  return out;
}

/// Limit of the pairwise estimator over a sigma_tilde grid (the m = 2 row).
inline LimitRow pairwise_curve(const Truth& truth, const std::vector<double>& sigma_tilde_values,
                               const QuadratureOrders& orders = {}) {
  return limit_row(truth, 2, sigma_tilde_values, orders);
}

}  // namespace clp
