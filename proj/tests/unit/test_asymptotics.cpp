#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "clp/asymptotics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

namespace oracle = clp::oracle;
using clp::ErrorCode;
using clp::Params;
using clp::SubsetScheme;
using clp::Truth;

const Truth kRef = Truth::reference_example();

double bias(const Params& p) { return std::abs(p.alpha - 0.5); }

// Under correct specification with m = 1 the expected log-likelihood is
// minus the binary entropy of P(Y = 1 | x), averaged over x.
TEST(ExpectedLoglik, SingleResponseIsNegativeEntropy) {
  double expected = 0.0;
  for (double x : {0.0, 1.0}) {
    const double p =
        oracle::gaussian_expectation([x](double b) { return oracle::Phi(0.5 + x + b); }, 0.0, 0.5);
    EXPECT_NEAR(p, oracle::Phi((0.5 + x) / std::sqrt(1.25)), 1e-12);
    expected += 0.5 * (p * std::log(p) + (1 - p) * std::log(1 - p));
  }
  EXPECT_NEAR(clp::expected_loglik(kRef.params0, kRef, 1, std::nullopt), expected, 1e-10);
}

TEST(ExpectedLoglik, AuxiliaryModelIdentity) {
  const Params p = Params::fixed_sigma(0.4, 1.3, 1.0);
  for (int k : {1, 2, 3})
    for (int m : {3, 5, 16, 64}) {
      const double comp = clp::expected_loglik(p, kRef, m, SubsetScheme{k, 1.0});
      const double full = clp::expected_loglik(p, kRef, k, std::nullopt);
      EXPECT_NEAR(comp, clp::binomial(m, k) * full, 1e-12 * std::abs(comp)) << "m " << m << " k " << k;
    }
}

TEST(ExpectedLoglik, PerturbationLowersValue) {
  for (int m : {2, 8}) {
    const Params lim = clp::solve_limit(kRef, m, 1.0);
    const double best = clp::expected_loglik(lim, kRef, m, std::nullopt);
    for (double d : {-1e-3, 1e-3}) {
      Params a = lim, b = lim;
      a.alpha += d;
      b.beta += d;
      EXPECT_LT(clp::expected_loglik(a, kRef, m, std::nullopt), best);
      EXPECT_LT(clp::expected_loglik(b, kRef, m, std::nullopt), best);
    }
  }
}

TEST(ExpectedLoglik, RejectsBadSizes) {
  EXPECT_CLP_ERROR(clp::expected_loglik(kRef.params0, kRef, 0, std::nullopt), ErrorCode::ConfigError);
  EXPECT_CLP_ERROR(clp::expected_loglik(kRef.params0, kRef, 2, SubsetScheme{3, 1.0}), ErrorCode::SubsetTooLarge);
}

TEST(SolveLimit, ConsistentAtTrueSigma) {
  for (int m : {1, 2, 4, 8, 16, 32, 64}) {
    const clp::LimitResult r = clp::solve_limit_detailed(kRef, m, 0.5);
    ASSERT_TRUE(r.ok);
    EXPECT_NEAR(r.params.alpha, 0.5, 1e-6) << "m " << m;
    EXPECT_NEAR(r.params.beta, 1.0, 1e-6) << "m " << m;
    EXPECT_LT(r.score_norm, 1e-8);
  }
}

TEST(SolveLimit, RandomCorrectlySpecifiedTruths) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> ua(-1.0, 1.0), ub(-1.5, 1.5), us(0.2, 1.5);
  for (int t = 0; t < 5; ++t) {
    const double sigma0 = us(gen);
    const Truth truth(ua(gen), ub(gen), clp::TrueLaw::normal(sigma0), clp::CovariateLaw::bernoulli(0.5));
    for (int m : {1, 2, 5}) {
      const Params p = clp::solve_limit(truth, m, sigma0);
      EXPECT_NEAR(p.alpha, truth.params0.alpha, 1e-6) << "truth " << t << " m " << m;
      EXPECT_NEAR(p.beta, truth.params0.beta, 1e-6) << "truth " << t << " m " << m;
    }
  }
}

TEST(SolveLimit, MisspecifiedPairwiseIsBiased) {
  for (double st : {0.25, 1.0}) EXPECT_GT(bias(clp::kwise_limit(kRef, 2, st)), 1e-2) << st;
}

TEST(SolveLimit, ScoreVanishesAtLimit) {
  for (double st : {0.1, 0.25, 1.0, 1.5})
    for (int m : {1, 3, 20}) {
      const clp::LimitResult r = clp::solve_limit_detailed(kRef, m, st);
      EXPECT_TRUE(r.ok);
      EXPECT_LT(r.score_norm, 1e-8) << st << " " << m;
    }
}

// Bias shrinks with m; at m = 64 it should be under a quarter of the m = 2 bias.
class BiasDecay : public ::testing::TestWithParam<double> {};

TEST_P(BiasDecay, StrictlyDecreasingAndSmall) {
  const double st = GetParam();
  std::vector<double> b;
  for (int m : {2, 8, 32, 64}) b.push_back(bias(clp::solve_limit(kRef, m, st)));
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b[i], b[i - 1]) << "step " << i;
  EXPECT_LT(b.back(), 0.25 * b.front()) << "m=2 bias " << b.front() << ", m=64 bias " << b.back();
}

INSTANTIATE_TEST_SUITE_P(SigmaTilde, BiasDecay, ::testing::Values(0.25, 1.0));

// Expected score at the solver's limit, recomputed with Simpson integrals
// for both the truth's count probabilities and the fitted likelihood.
TEST(SolveLimit, ExpectedScoreVanishesUnderSimpsonOracle) {
  for (auto [m, st] : {std::pair{64, 0.25}, std::pair{8, 1.0}}) {
    const Params p = clp::solve_limit(kRef, m, st);
    double ga = 0.0, gb = 0.0;
    for (double x : {0.0, 1.0}) {
      const double mu = p.alpha + p.beta * x;
      for (int s = 0; s <= m; ++s) {
        const auto resp = [&](double eta) {
          return std::exp(s * std::log(oracle::Phi(eta)) + (m - s) * std::log(oracle::Phi(-eta)));
        };
        const double prob = std::exp(std::lgamma(m + 1.0) - std::lgamma(s + 1.0) - std::lgamma(m - s + 1.0)) *
                            oracle::gaussian_expectation([&](double b) { return resp(0.5 + x + b); }, 0.0, 0.5, 0.0);
        const double lo = mu - 10 * st, hi = mu + 10 * st;
        const auto g = [&](double eta) { return resp(eta) * oracle::phi((eta - mu) / st) / st; };
        const double like = oracle::adaptive_simpson(g, lo, hi, 0.0);
        const double num = oracle::adaptive_simpson([&](double eta) { return g(eta) * (eta - mu); }, lo, hi, 0.0);
        const double u = num / (like * st * st);
        ga += 0.5 * prob * u;
        gb += 0.5 * prob * u * x;
      }
    }
    EXPECT_LT(std::abs(ga), 1e-7) << "m " << m << " sigma_tilde " << st;
    EXPECT_LT(std::abs(gb), 1e-7) << "m " << m << " sigma_tilde " << st;
  }
}

TEST(KwiseLimit, IndependenceLimitSolvesMarginalEquations) {
  for (double st : {0.25, 1.0, 1.5}) {
    const Params p = clp::kwise_limit(kRef, 1, st);
    const double scale = std::sqrt(1.0 + st * st);
    for (double x : {0.0, 1.0}) {
      const double target =
          oracle::gaussian_expectation([x](double b) { return oracle::Phi(0.5 + x + b); }, 0.0, 0.5);
      const double eta = oracle::bisect([&](double e) { return oracle::Phi(e / scale) - target; }, -10, 10);
      EXPECT_NEAR(p.alpha + p.beta * x, eta, 1e-7) << "sigma_tilde " << st << " x " << x;
    }
  }
}

TEST(KwiseLimit, IndependentOfClusterSize) {
  for (int k : {1, 2, 3}) {
    const Params ref = clp::kwise_limit(kRef, k, 1.0);
    for (int m : {k, k + 1, 8, 40}) {
      const Params p = clp::solve_limit(kRef, m, 1.0, SubsetScheme{k, 1.0});
      EXPECT_NEAR(p.alpha, ref.alpha, 1e-9) << "k " << k << " m " << m;
      EXPECT_NEAR(p.beta, ref.beta, 1e-9) << "k " << k << " m " << m;
    }
  }
  EXPECT_CLP_ERROR(clp::kwise_limit(kRef, 0, 1.0), ErrorCode::ConfigError);
}

TEST(LimitSurface, RowsColumnsAndResiduals) {
  const std::vector<int> ms{1, 2, 4, 8, 16, 32, 64};
  const std::vector<double> sts{0.1, 0.3, 0.5, 0.7, 1.0, 1.5};
  const clp::LimitSurface s = clp::limit_surface(kRef, ms, sts);
  EXPECT_EQ(s.failed_cells(), 0u);
  for (std::size_t i = 0; i < ms.size(); ++i)
    for (std::size_t j = 0; j < sts.size(); ++j) EXPECT_LT(s.residual_score_norm[i][j], 1e-7);

  // sigma_tilde = sigma0 row is the truth.
  for (std::size_t i = 0; i < ms.size(); ++i) {
    EXPECT_NEAR(s.limits[i][2].alpha, 0.5, 1e-6);
    EXPECT_NEAR(s.limits[i][2].beta, 1.0, 1e-6);
  }

  // m = 2 column is the pairwise curve.
  const clp::LimitRow pc = clp::pairwise_curve(kRef, sts);
  for (std::size_t j = 0; j < sts.size(); ++j) {
    EXPECT_EQ(s.limits[1][j].alpha, pc.limits[j].alpha);
    EXPECT_EQ(s.limits[1][j].beta, pc.limits[j].beta);
  }

  // Away from sigma0 every row moves toward the truth as m grows.
  for (std::size_t j = 0; j < sts.size(); ++j) {
    if (j == 2) continue;
    for (std::size_t i = 1; i < ms.size(); ++i)
      EXPECT_LT(bias(s.limits[i][j]), bias(s.limits[i - 1][j])) << "sigma_tilde " << sts[j] << " m " << ms[i];
  }
}

TEST(LimitSurface, RejectsEmptyGrid) {
  EXPECT_CLP_ERROR(clp::limit_surface(kRef, {}, {1.0}), ErrorCode::ConfigError);
  EXPECT_CLP_ERROR(clp::solve_limit(kRef, 2, 0.0), ErrorCode::ConfigError);
}

TEST(SolveLimit, NonNormalTruths) {
  for (const clp::TrueLaw& law :
       {clp::TrueLaw::two_point_centered(0.3, 0.8), clp::TrueLaw::student_t(5.0, 0.4), clp::TrueLaw::uniform(0.9)}) {
    const Truth truth(0.5, 1.0, law, clp::CovariateLaw::bernoulli(0.5));
    for (int m : {2, 16}) {
      const clp::LimitResult r = clp::solve_limit_detailed(truth, m, 0.5);
      EXPECT_TRUE(r.ok) << law.describe() << " m " << m;
    }
  }
}

TEST(SolveLimit, FreeSigmaRecoversNormalTruth) {
  const clp::LimitResult r = clp::solve_limit_free_sigma(kRef, 4);
  ASSERT_TRUE(r.ok);
  EXPECT_NEAR(r.params.alpha, 0.5, 1e-6);
  EXPECT_NEAR(r.params.beta, 1.0, 1e-6);
  EXPECT_NEAR(r.params.sigma, 0.5, 1e-6);
}

}  // namespace
