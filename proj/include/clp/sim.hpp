#pragma once

// Synthetic two-level datasets and repeated-fit experiments.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clp/asymptotics.hpp"
#include "clp/likelihood.hpp"
#include "clp/model.hpp"
#include "clp/rng.hpp"
#include "clp/truth.hpp"

namespace clp {

/// n clusters of size m drawn from the truth; deterministic in `seed`.
inline Dataset simulate_dataset(const Truth& truth, int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw Error(ErrorCode::ConfigError, "simulate_dataset needs n, m >= 1");
  Engine eng = make_engine(seed);
  std::vector<ClusterData> clusters;
  clusters.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = draw_covariate(truth.cov, eng);
    const double eta0 = truth.eta0(x, draw_effect(truth.law, eng));
    clusters.emplace_back(x, draw_responses(eta0, m, eng));
  }
  return Dataset(std::move(clusters));
}

/// Full likelihood (no k) or k-wise composite likelihood.
struct Estimator {
  std::optional<int> k;

  static Estimator full() { return {}; }
  static Estimator kwise(int k) { return {k}; }

  std::string name() const {
    if (!k) return "full";
    if (*k == 2) return "pairwise";
    return std::to_string(*k) + "-wise";
  }
  std::optional<SubsetScheme> scheme() const {
    if (!k) return std::nullopt;
    return SubsetScheme{*k, 1.0};
  }
};

struct SimConfig {
  Truth truth = Truth::reference_example();
  int n = 200;
  int m = 4;
  std::vector<Estimator> estimators{Estimator::full()};
  int replicates = 50;
  std::uint64_t seed = 20240101;
  SigmaMode fit_sigma = SigmaMode::fixed_at(1.0);
  int quad_order = kDefaultLikelihoodOrder;
};

struct CoordSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

struct EstimatorReport {
  Estimator estimator;
  std::vector<Params> estimates;  // per replicate; NaN on failure
  std::vector<bool> converged;
  std::vector<std::string> failures;  // per replicate; empty if fit ran
  CoordSummary alpha, beta, sigma;
  std::optional<Params> limit;  // pseudo-true reference, when computable
  int n_ok = 0;
};

struct SimReport {
  SimConfig config;
  std::vector<EstimatorReport> estimators;
};

inline CoordSummary summarise(const std::vector<double>& v) {
  CoordSummary out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    out.se = out.sd / std::sqrt(static_cast<double>(v.size()));
  }
  return out;
}

/// Replicate r uses dataset stream (seed, r); fits every estimator on it.
inline SimReport run_experiment(const SimConfig& config) {
  if (config.n < 1 || config.m < 1 || config.replicates < 1)
    throw Error(ErrorCode::ConfigError, "n, m and replicates must be >= 1");
  for (const auto& e : config.estimators)
    if (e.k && (*e.k < 1 || *e.k > config.m)) throw Error(ErrorCode::ConfigError, "k must satisfy 1 <= k <= m");

  const LikelihoodRule& rule = likelihood_rule_cached(config.quad_order);
  SimReport report;
  report.config = config;
  for (const auto& e : config.estimators) report.estimators.push_back({e, {}, {}, {}, {}, {}, {}, {}, 0});

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int r = 0; r < config.replicates; ++r) {
    const Dataset data =
        simulate_dataset(config.truth, config.n, config.m, stream_seed(config.seed, {static_cast<std::uint64_t>(r)}));
    for (auto& er : report.estimators) {
      try {
        const FitResult f = fit(data, er.estimator.scheme(), config.fit_sigma, rule);
        er.estimates.push_back(f.params);
        er.converged.push_back(f.converged && !f.boundary);
        er.failures.emplace_back();
      } catch (const Error& ex) {
        er.estimates.push_back({nan, nan, nan, config.fit_sigma});
        er.converged.push_back(false);
        er.failures.emplace_back(ex.what());
      }
    }
  }

  for (auto& er : report.estimators) {
    std::vector<double> a, b, s;
    for (std::size_t r = 0; r < er.estimates.size(); ++r) {
      if (!er.converged[r]) continue;
      a.push_back(er.estimates[r].alpha);
      b.push_back(er.estimates[r].beta);
      s.push_back(er.estimates[r].sigma);
    }
    er.n_ok = static_cast<int>(a.size());
    er.alpha = summarise(a);
    er.beta = summarise(b);
    er.sigma = summarise(s);
    try {
      if (config.fit_sigma.is_fixed()) {
        const double st = *config.fit_sigma.fixed;
        er.limit = er.estimator.k ? kwise_limit(config.truth, *er.estimator.k, st)
                                  : solve_limit(config.truth, config.m, st);
      } else {
        const LimitResult lr = solve_limit_free_sigma(config.truth, config.m, er.estimator.scheme());
        if (lr.ok) er.limit = lr.params;
      }
    } catch (const Error&) {
      er.limit.reset();
    }
  }
  return report;
}

/// (n, m) rungs with both multiplied by `factor` per rung.
struct Rung {
  int n;
  int m;
};

inline std::vector<Rung> ladder(int n0 = 200, int m0 = 4, int rungs = 3, int factor = 4) {
  std::vector<Rung> out;
  for (int i = 0; i < rungs; ++i) {
    out.push_back({n0, m0});
    n0 *= factor;
    m0 *= factor;
  }
  return out;
}

}  // namespace clp
