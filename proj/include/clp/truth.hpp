#pragma once

// The data-generating process: true (alpha0, beta0), the random-effect law
// and the covariate law.

#include <cmath>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "clp/model.hpp"
#include "clp/normal.hpp"
#include "clp/rng.hpp"

namespace clp {

struct Truth {
  Params params0;  // alpha0, beta0; sigma holds the law's SD
  TrueLaw law;
  CovariateLaw cov;

  Truth(double alpha0, double beta0, TrueLaw law_, CovariateLaw cov_)
      : params0(Params::free_sigma(alpha0, beta0, std::sqrt(law_.variance()))),
        law(std::move(law_)),
        cov(std::move(cov_)) {
    validate(params0);
  }

  /// alpha0 = 0.5, beta0 = 1, b ~ N(0, 0.5^2), x ~ Bernoulli(1/2).
  static Truth reference_example() {
    return Truth(0.5, 1.0, TrueLaw::normal(0.5), CovariateLaw::bernoulli(0.5));
  }

  double eta0(double x, double b) const { return params0.alpha + params0.beta * x + b; }
};

inline double draw_covariate(const CovariateLaw& cov, Engine& eng) {
  const double u = uniform01(eng);
  double acc = 0.0;
  for (const auto& pt : cov.support()) {
    acc += pt.prob;
    if (u < acc) return pt.x;
  }
  return cov.support().back().x;
}

inline double draw_effect(const TrueLaw& law, Engine& eng) {
  struct Draw {
    Engine& eng;
    double operator()(const NormalLaw& l) const { return l.sd * std::normal_distribution<double>(0.0, 1.0)(eng); }
    double operator()(const TwoPointLaw& l) const { return uniform01(eng) < l.p ? l.a : l.b; }
    double operator()(const StudentTLaw& l) const {
      return l.scale * std::student_t_distribution<double>(l.df)(eng);
    }
    double operator()(const UniformLaw& l) const {
      return std::uniform_real_distribution<double>(-l.halfwidth, l.halfwidth)(eng);
    }
  };
  return std::visit(Draw{eng}, law.kind());
}

/// m conditionally independent probit responses at linear predictor eta.
inline std::vector<int> draw_responses(double eta, int m, Engine& eng) {
  const double p = normal::cdf(eta);
  std::vector<int> y(static_cast<std::size_t>(m));
  for (auto& v : y) v = uniform01(eng) < p ? 1 : 0;
  return y;
}

}  // namespace clp
