#pragma once

// Value types for the two-level random-intercept probit model.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "clp/error.hpp"

namespace clp {

/// How the random-effect SD is treated: estimated, or pinned at a constant.
struct SigmaMode {
  std::optional<double> fixed;  // engaged => sigma is held at *fixed

  static SigmaMode free_mode() { return {}; }
  static SigmaMode fixed_at(double sigma_tilde) { return {sigma_tilde}; }

  bool is_fixed() const { return fixed.has_value(); }
  friend bool operator==(const SigmaMode&, const SigmaMode&) = default;
};

/// Parameter point (alpha, beta, sigma) of the assumed model.
struct Params {
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 0.0;
  SigmaMode sigma_mode{};

  static Params free_sigma(double alpha, double beta, double sigma) {
    return {alpha, beta, sigma, SigmaMode::free_mode()};
  }
  static Params fixed_sigma(double alpha, double beta, double sigma_tilde) {
    return {alpha, beta, sigma_tilde, SigmaMode::fixed_at(sigma_tilde)};
  }

  /// Number of estimated coordinates: (alpha, beta) or (alpha, beta, sigma).
  int n_free() const { return sigma_mode.is_fixed() ? 2 : 3; }

  double linear_predictor(double x) const { return alpha + beta * x; }

  friend bool operator==(const Params&, const Params&) = default;
};

inline void validate(const Params& p) {
  if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma))
    throw Error(ErrorCode::NegativeSigma, "sigma must be finite and >= 0, got " + std::to_string(p.sigma));
  if (p.sigma_mode.is_fixed()) {
    const double st = *p.sigma_mode.fixed;
    if (!(st > 0.0))
      throw Error(ErrorCode::FixedSigmaMismatch, "fixed sigma must be > 0");
    if (p.sigma != st)
      throw Error(ErrorCode::FixedSigmaMismatch,
                  "sigma " + std::to_string(p.sigma) + " differs from fixed value " + std::to_string(st));
  }
}

// ---------------------------------------------------------------------------
// Random-effect laws. All are mean zero with finite variance.

struct NormalLaw {
  double sd;
};
struct TwoPointLaw {
  double p;  // mass at a
  double a;
  double b;  // mass 1 - p
};
struct StudentTLaw {
  double df;
  double scale;
};
struct UniformLaw {
  double halfwidth;
};

class TrueLaw {
 public:
  using Kind = std::variant<NormalLaw, TwoPointLaw, StudentTLaw, UniformLaw>;

  static TrueLaw normal(double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw Error(ErrorCode::InvalidLaw, "normal sd must be > 0");
    return TrueLaw(NormalLaw{sd});
  }

  static TrueLaw two_point(double p, double a, double b) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidLaw, "mixture p must lie in (0,1)");
    if (!std::isfinite(a) || !std::isfinite(b) || a == b)
      throw Error(ErrorCode::InvalidLaw, "mixture atoms must be finite and distinct");
    const double mean = p * a + (1.0 - p) * b;
    if (std::abs(mean) > 1e-12 * (std::abs(a) + std::abs(b)))
      throw Error(ErrorCode::InvalidLaw, "mixture must have mean zero (p*a + (1-p)*b = 0)");
    return TrueLaw(TwoPointLaw{p, a, b});
  }

  /// Mixture with mass p at a; the second atom is placed to make the mean zero.
  static TrueLaw two_point_centered(double p, double a) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidLaw, "mixture p must lie in (0,1)");
    return two_point(p, a, -p * a / (1.0 - p));
  }

  static TrueLaw student_t(double df, double scale) {
    if (!(df > 2.0)) throw Error(ErrorCode::InvalidLaw, "student-t df must be > 2 for finite variance");
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidLaw, "student-t scale must be > 0");
    return TrueLaw(StudentTLaw{df, scale});
  }

  static TrueLaw uniform(double halfwidth) {
    if (!(halfwidth > 0.0)) throw Error(ErrorCode::InvalidLaw, "uniform halfwidth must be > 0");
    return TrueLaw(UniformLaw{halfwidth});
  }

  const Kind& kind() const { return kind_; }

  double variance() const {
    struct V {
      double operator()(const NormalLaw& l) const { return l.sd * l.sd; }
      double operator()(const TwoPointLaw& l) const { return l.p * l.a * l.a + (1.0 - l.p) * l.b * l.b; }
      double operator()(const StudentTLaw& l) const { return l.scale * l.scale * l.df / (l.df - 2.0); }
      double operator()(const UniformLaw& l) const { return l.halfwidth * l.halfwidth / 3.0; }
    };
    return std::visit(V{}, kind_);
  }

  std::string describe() const {
    struct D {
      std::string operator()(const NormalLaw& l) const { return "normal(sd=" + fmt(l.sd) + ")"; }
      std::string operator()(const TwoPointLaw& l) const {
        return "mixture(p=" + fmt(l.p) + ",a=" + fmt(l.a) + ",b=" + fmt(l.b) + ")";
      }
      std::string operator()(const StudentTLaw& l) const {
        return "student_t(df=" + fmt(l.df) + ",scale=" + fmt(l.scale) + ")";
      }
      std::string operator()(const UniformLaw& l) const { return "uniform(halfwidth=" + fmt(l.halfwidth) + ")"; }
      static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
      }
    };
    return std::visit(D{}, kind_);
  }

 private:
  explicit TrueLaw(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

inline double law_variance(const TrueLaw& law) { return law.variance(); }

// ---------------------------------------------------------------------------

struct CovariatePoint {
  double x;
  double prob;
};

/// Finite discrete covariate law.
class CovariateLaw {
 public:
  explicit CovariateLaw(std::vector<CovariatePoint> support) : support_(std::move(support)) {
    if (support_.empty()) throw Error(ErrorCode::InvalidCovariateLaw, "empty support");
    double total = 0.0;
    for (const auto& pt : support_) {
      if (!(pt.prob > 0.0) || !std::isfinite(pt.x))
        throw Error(ErrorCode::InvalidCovariateLaw, "support probabilities must be > 0");
      total += pt.prob;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidCovariateLaw, "support probabilities must sum to 1");
  }

  static CovariateLaw bernoulli(double p) { return CovariateLaw({{0.0, 1.0 - p}, {1.0, p}}); }
  static CovariateLaw constant(double x) { return CovariateLaw({{x, 1.0}}); }

  const std::vector<CovariatePoint>& support() const { return support_; }

 private:
  std::vector<CovariatePoint> support_;
};

// ---------------------------------------------------------------------------

/// One item: its covariate and m binary responses.
class ClusterData {
 public:
  ClusterData(double x, std::vector<int> y) : x_(x), y_(std::move(y)) {
    if (y_.empty()) throw Error(ErrorCode::InvalidCluster, "cluster needs at least one response");
    for (int v : y_)
      if (v != 0 && v != 1) throw Error(ErrorCode::InvalidCluster, "responses must be 0 or 1");
    successes_ = std::accumulate(y_.begin(), y_.end(), 0);
  }

  /// Cluster with s leading ones followed by m - s zeros.
  static ClusterData from_count(double x, int s, int m) {
    if (m < 1 || s < 0 || s > m) throw Error(ErrorCode::InvalidCluster, "need 0 <= s <= m, m >= 1");
    std::vector<int> y(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < s; ++j) y[static_cast<std::size_t>(j)] = 1;
    return ClusterData(x, std::move(y));
  }

  double x() const { return x_; }
  const std::vector<int>& y() const { return y_; }
  int m() const { return static_cast<int>(y_.size()); }
  int s() const { return successes_; }

 private:
  double x_;
  std::vector<int> y_;
  int successes_ = 0;
};

/// All size-k subsets of a cluster, each with the same weight.
struct SubsetScheme {
  int k = 2;
  double weight = 1.0;
};

}  // namespace clp
