#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "clp/likelihood.hpp"
#include "clp/quadrature.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

namespace oracle = clp::oracle;
using clp::ErrorCode;

TEST(GhRule, OrderOneIsMeanRule) {
  const auto r = clp::gh_rule(1);
  ASSERT_EQ(r.order(), 1);
  EXPECT_EQ(r.nodes[0], 0.0);
  EXPECT_EQ(r.weights[0], 1.0);
}

TEST(GhRule, OrderTwoSecondMomentIsOne) {
  const auto r = clp::gh_rule(2);
  double m2 = 0;
  for (int i = 0; i < 2; ++i) m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
  EXPECT_NEAR(m2, 1.0, 1e-15);
}

TEST(GhRule, Order40PhiIntegratesToHalf) {
  EXPECT_NEAR(clp::integrate_gaussian([](double b) { return oracle::Phi(b); }, 0.0, 1.0, clp::gh_rule(40)), 0.5,
              1e-12);
}

TEST(GhRule, RejectsOutOfRangeOrders) {
  EXPECT_CLP_ERROR(clp::gh_rule(0), ErrorCode::OrderOutOfRange);
  EXPECT_CLP_ERROR(clp::gh_rule(201), ErrorCode::OrderOutOfRange);
  EXPECT_NO_THROW(clp::gh_rule(200));
}

class GhRuleInvariants : public ::testing::TestWithParam<int> {};

TEST_P(GhRuleInvariants, SymmetricPositiveNormalised) {
  const auto r = clp::gh_rule(GetParam());
  const int n = r.order();
  double total = 0;
  for (int i = 0; i < n; ++i) {
    EXPECT_GT(r.weights[i], 0.0);
    EXPECT_EQ(r.nodes[i], -r.nodes[n - 1 - i]);
    EXPECT_EQ(r.weights[i], r.weights[n - 1 - i]);
    total += r.weights[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST_P(GhRuleInvariants, ExactForMonomials) {
  // Odd moments are summed over mirrored node pairs; even moments are
  // compared on the log scale so high degrees do not overflow.
  const auto r = clp::gh_rule(GetParam());
  const int n = r.order();
  for (int d = 0; d <= 2 * n - 1; ++d) {
    if (d % 2 == 1) {
      // Nodes are scaled by the largest one to keep powers finite.
      const double scale = std::abs(r.nodes[0]) > 0 ? std::abs(r.nodes[0]) : 1.0;
      double acc = 0;
      for (int i = 0; i < n / 2; ++i)
        acc += r.weights[i] * std::pow(r.nodes[i] / scale, d) +
               r.weights[n - 1 - i] * std::pow(r.nodes[n - 1 - i] / scale, d);
      const bool ok = acc == 0.0 || std::log(std::abs(acc)) + d * std::log(scale) < std::log(1e-9);
      EXPECT_TRUE(ok) << "order " << n << " degree " << d;
      continue;
    }
    std::vector<double> logs;
    for (int i = 0; i < n; ++i)
      if (r.nodes[i] != 0.0 || d == 0)
        logs.push_back(std::log(r.weights[i]) + (d == 0 ? 0.0 : d * std::log(std::abs(r.nodes[i]))));
    const double peak = *std::max_element(logs.begin(), logs.end());
    double total = 0;
    for (double l : logs) total += std::exp(l - peak);
    const double log_rule = peak + std::log(total);
    const double log_exact = std::lgamma(d + 1.0) - 0.5 * d * std::log(2.0) - std::lgamma(0.5 * d + 1.0);
    const double exact = std::exp(log_exact);
    if (std::isfinite(exact))
      EXPECT_LT(std::abs(std::exp(log_rule) - exact), 1e-9 * (1.0 + exact)) << "order " << n << " degree " << d;
    else
      EXPECT_LT(std::abs(log_rule - log_exact), 1e-9) << "order " << n << " degree " << d;
  }
}

INSTANTIATE_TEST_SUITE_P(Orders, GhRuleInvariants,
                         ::testing::Values(1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 20, 30, 40, 60, 100, 150, 200));

TEST(GaussLegendre, IntegratesPolynomials) {
  const auto r = clp::gauss_legendre_rule(20);
  for (int d = 0; d <= 39; ++d) {
    double acc = 0;
    for (int i = 0; i < r.order(); ++i) acc += r.weights[i] * std::pow(r.nodes[i], d);
    const double exact = d % 2 == 1 ? 0.0 : 2.0 / (d + 1);
    EXPECT_NEAR(acc, exact, 1e-14) << d;
  }
}

TEST(IntegrateGaussian, Examples) {
  const auto& r60 = clp::gh_rule_cached(60);
  EXPECT_NEAR(clp::integrate_gaussian([](double b) { return b; }, 0.3, 1.0, r60), 0.3, 1e-14);
  EXPECT_NEAR(clp::integrate_gaussian([](double b) { return b * b; }, 0.0, 0.5, r60), 0.25, 1e-14);
  const double v = clp::integrate_gaussian([](double b) { return oracle::Phi(0.5 + b); }, 0.0, 0.5, r60);
  EXPECT_NEAR(v, oracle::Phi(0.5 / std::sqrt(1.25)), 1e-12);
  EXPECT_NEAR(v, 0.672639576990711, 1e-12);
  const double simpson = oracle::gaussian_expectation([](double b) { return oracle::Phi(0.5 + b); }, 0.0, 0.5);
  EXPECT_NEAR(v, simpson, 1e-8 * simpson);
}

TEST(IntegrateGaussian, ZeroSdEvaluatesDirectly) {
  EXPECT_EQ(clp::integrate_gaussian([](double b) { return 3 * b; }, 0.7, 0.0, clp::gh_rule(5)), 3 * 0.7);
}

TEST(IntegrateGaussian, NonFiniteIntegrandIsReported) {
  EXPECT_CLP_ERROR(clp::integrate_gaussian([](double b) { return b > 0 ? INFINITY : 0.0; }, 0.0, 1.0, clp::gh_rule(8)),
                   ErrorCode::NonFiniteIntegrand);
  EXPECT_CLP_ERROR(clp::integrate_gaussian([](double) { return 1.0; }, 0.0, -1.0, clp::gh_rule(8)),
                   ErrorCode::NegativeSigma);
}

// Smooth bounded integrands against the adaptive Simpson oracle. All are
// entire functions; an integrand with poles near the real axis (a logistic,
// say) converges more slowly and is not what the likelihood integrates.
TEST(IntegrateGaussian, AgreesWithSimpsonOracle) {
  const std::vector<std::function<double(double)>> fs{
      [](double b) { return oracle::Phi(0.5 + b); },
      [](double b) { return std::sin(b) + 2.0; },
      [](double b) { return std::exp(-b * b); },
      [](double b) { return oracle::Phi(b) * oracle::Phi(-0.3 - b); },
  };
  const auto& rule = clp::gh_rule_cached(60);
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (double mean : {-1.0, 0.0, 0.8})
      for (double sd : {0.25, 0.5, 1.0, 1.5}) {
        const double q = clp::integrate_gaussian(fs[i], mean, sd, rule);
        const double o = oracle::gaussian_expectation(fs[i], mean, sd);
        EXPECT_LT(std::abs(q - o), 1e-8 * std::abs(o)) << "f" << i << " mean " << mean << " sd " << sd;
      }
}

TEST(IntegrateLaw, MeanZeroForEveryLaw) {
  const auto& rule = clp::gh_rule_cached(100);
  for (const auto& law : {clp::TrueLaw::normal(0.5), clp::TrueLaw::two_point_centered(0.3, 1.2),
                          clp::TrueLaw::student_t(5.0, 0.4), clp::TrueLaw::uniform(0.9)})
    EXPECT_NEAR(clp::integrate_law([](double b) { return b; }, law, rule), 0.0, 1e-10) << law.describe();
}

TEST(IntegrateLaw, Examples) {
  const auto& rule = clp::gh_rule_cached(100);
  EXPECT_NEAR(clp::integrate_law([](double b) { return b * b; }, clp::TrueLaw::normal(0.5), rule), 0.25, 1e-14);
  EXPECT_NEAR(clp::integrate_law([](double b) { return oracle::Phi(b); }, clp::TrueLaw::two_point(0.5, 1, -1), rule),
              0.5, 1e-15);
}

// The Student-t rule drops 1e-10 of mass in each tail, which costs about
// 1e-7 of the variance at df = 10.
TEST(IntegrateLaw, SecondMomentsMatchVariance) {
  const auto& rule = clp::gh_rule_cached(100);
  for (const auto& law : {clp::TrueLaw::uniform(0.9), clp::TrueLaw::student_t(10.0, 0.4)})
    EXPECT_NEAR(clp::integrate_law([](double b) { return b * b; }, law, rule), law.variance(), 1e-6 * law.variance())
        << law.describe();
}

// Non-normal laws against Simpson over their densities.
TEST(IntegrateLaw, AgreesWithDensityOracle) {
  const auto& rule = clp::gh_rule_cached(100);
  const auto f = [](double b) { return oracle::Phi(0.5 + b); };

  const double h = 0.9;
  const double uni = oracle::adaptive_simpson([&](double b) { return f(b) / (2 * h); }, -h, h);
  EXPECT_NEAR(clp::integrate_law(f, clp::TrueLaw::uniform(h), rule), uni, 1e-8 * uni);

  const double df = 5.0, scale = 0.4;
  const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  const auto tpdf = [&](double b) {
    const double t = b / scale;
    return std::exp(logc - (df + 1) / 2 * std::log1p(t * t / df)) / scale;
  };
  // Tails beyond +-400 carry < 1e-10 of the mass for this scale.
  const double tt = oracle::adaptive_simpson([&](double b) { return f(b) * tpdf(b); }, -400.0, 400.0, 1e-14);
  EXPECT_NEAR(clp::integrate_law(f, clp::TrueLaw::student_t(df, scale), rule), tt, 1e-8 * tt);
}

TEST(HalfGhRule, MomentsAndWeights) {
  for (int n : {1, 2, 5, 10, 30, 60, 100}) {
    const auto r = clp::half_gh_rule(n);
    ASSERT_EQ(r.order(), n);
    double total = 0;
    for (int i = 0; i < n; ++i) {
      EXPECT_GT(r.nodes[i], 0.0);
      EXPECT_GT(r.weights[i], 0.0);
      total += r.weights[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    // E U^d for U the half-normal: 2^(d/2) Gamma((d+1)/2) / sqrt(pi).
    for (int d = 0; d <= 2 * n - 1; ++d) {
      long double acc = 0;
      for (int i = 0; i < n; ++i)
        acc += static_cast<long double>(r.weights[i]) * std::pow(static_cast<long double>(r.nodes[i]), d);
      const double exact = std::exp(0.5 * d * std::log(2.0) + std::lgamma(0.5 * (d + 1)) - 0.5 * std::log(M_PI));
      EXPECT_LT(std::abs(static_cast<double>(acc) - exact), 1e-9 * (1.0 + exact)) << "order " << n << " degree " << d;
    }
  }
  EXPECT_CLP_ERROR(clp::half_gh_rule(0), ErrorCode::OrderOutOfRange);
  EXPECT_CLP_ERROR(clp::half_gh_rule(101), ErrorCode::OrderOutOfRange);
}

TEST(LikelihoodRule, OrderCountsBothSides) {
  EXPECT_EQ(clp::likelihood_rule(60).order(), 60);
  EXPECT_EQ(clp::likelihood_rule(7).order(), 8);
  EXPECT_CLP_ERROR(clp::likelihood_rule(0), ErrorCode::OrderOutOfRange);
}

// Random-effect integrals of the likelihood against Simpson on the eta scale.
TEST(LikelihoodIntegral, AgreesWithSimpsonOracle) {
  const auto& rule = clp::likelihood_rule_cached(60);
  for (double sigma : {0.1, 0.5, 1.0, 1.5})
    for (int m : {1, 2, 8, 64, 256})
      for (int s : {0, 1, m / 2, m})
        for (double mu : {-2.0, 0.5, 3.0}) {
          const auto integrand = [&](double eta) {
            return std::pow(oracle::Phi(eta), s) * std::pow(oracle::Phi(-eta), m - s) * oracle::phi((eta - mu) / sigma) /
                   sigma;
          };
          // Integrate over the region where the integrand lives.
          const double o = oracle::adaptive_simpson(integrand, mu - 12 * sigma - 9, mu + 12 * sigma + 9, 1e-300);
          if (!(o > 1e-250)) continue;
          const double q = std::exp(clp::count_term(clp::Params::free_sigma(mu, 0.0, sigma), s, m, 0.0, rule).value);
          EXPECT_LT(std::abs(q - o), 1e-8 * o) << "sigma " << sigma << " m " << m << " s " << s << " mu " << mu;
        }
}

// Doubling the order moves likelihood integrands by < 1e-10 once order >= 60.
TEST(Plateau, LikelihoodIntegrandsStable) {
  const auto& r60 = clp::likelihood_rule_cached(60);
  const auto& r120 = clp::likelihood_rule_cached(120);
  for (double sigma : {0.1, 0.5, 1.0, 1.5, 3.0})
    for (int m : {1, 2, 8, 64, 256})
      for (int s : {0, 1, m / 2, m}) {
        const clp::Params p = clp::Params::free_sigma(0.5, 1.0, sigma);
        SCOPED_TRACE(m);
        for (double x : {0.0, 1.0}) {
          const double a = clp::count_term(p, s, m, x, r60).value;
          const double b = clp::count_term(p, s, m, x, r120).value;
          EXPECT_LT(std::abs(a - b), 1e-10) << "sigma " << sigma << " m " << m << " s " << s << " x " << x;
        }
      }
}

}  // namespace
