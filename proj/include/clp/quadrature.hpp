#pragma once

// Gauss-Hermite (probabilists' convention, full and half range) and
// Gauss-Legendre rules, and the one-dimensional integrators built on them.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "clp/error.hpp"
#include "clp/model.hpp"

namespace clp {

/// Nodes and weights of a Gauss rule. For Gauss-Hermite rules the weight
/// function is the standard normal density and the weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kMaxHermiteOrder = 200;
inline constexpr int kDefaultLikelihoodOrder = 60;
inline constexpr int kDefaultTruthOrder = 100;

namespace detail {

// Eigenvalues/first eigenvector components of a symmetric Jacobi matrix.
inline void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag,
                         Eigen::VectorXd& nodes, Eigen::VectorXd& first_components) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::SolverFailure, "tridiagonal eigensolver failed");
  nodes = solver.eigenvalues();
  first_components = solver.eigenvectors().row(0).transpose();
}

// Orthonormal Hermite recurrence (w.r.t. the standard normal density).
// Returns sum_{j<n} p_j(x)^2 and writes p_n(x), p_n'(x).
inline double hermite_christoffel(int n, double x, double& pn, double& dpn) {
  double p_prev = 0.0, p = 1.0, sumsq = 0.0;
  for (int j = 0; j < n; ++j) {
    sumsq += p * p;
    const double next = (x * p - std::sqrt(static_cast<double>(j)) * p_prev) / std::sqrt(j + 1.0);
    p_prev = p;
    p = next;
  }
  pn = p;
  // p_n' = sqrt(n) * p_{n-1}
  dpn = std::sqrt(static_cast<double>(n)) * p_prev;
  return sumsq;
}

// Same for a general orthonormal recurrence: a[j] on the diagonal, b[j]
// coupling degrees j and j + 1 (b needs n entries).
inline double jacobi_christoffel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n, double x, double& qn,
                                 double& dqn) {
  double q_prev = 0.0, q = 1.0, d_prev = 0.0, d = 0.0, sumsq = 0.0;
  for (int j = 0; j < n; ++j) {
    sumsq += q * q;
    const double bp = j > 0 ? b[j - 1] : 0.0;
    const double next = ((x - a[j]) * q - bp * q_prev) / b[j];
    const double dnext = (q + (x - a[j]) * d - bp * d_prev) / b[j];
    q_prev = q;
    q = next;
    d_prev = d;
    d = dnext;
  }
  qn = q;
  dqn = d;
  return sumsq;
}

}  // namespace detail

/// Gauss-Hermite rule exact for polynomials of degree <= 2*order-1 against
/// the standard normal density.
inline QuadratureRule gh_rule(int order) {
  if (order < 1 || order > kMaxHermiteOrder)
    throw Error(ErrorCode::OrderOutOfRange, "Gauss-Hermite order must be in [1, 200], got " + std::to_string(order));
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  if (order == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(order - 1);
  for (int j = 1; j < order; ++j) off[j - 1] = std::sqrt(static_cast<double>(j));
  Eigen::VectorXd nodes, v0;
  detail::golub_welsch(diag, off, nodes, v0);

  // Polish the eigenvalues with Newton on p_n, then take Christoffel weights.
  for (int i = 0; i < order; ++i) {
    double x = nodes[i];
    for (int it = 0; it < 4; ++it) {
      double pn, dpn;
      detail::hermite_christoffel(order, x, pn, dpn);
      if (dpn == 0.0) break;
      const double step = pn / dpn;
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    nodes[i] = x;
  }
  // Enforce exact symmetry.
  for (int i = 0; i < order / 2; ++i) {
    const double h = 0.5 * (nodes[order - 1 - i] - nodes[i]);
    nodes[i] = -h;
    nodes[order - 1 - i] = h;
  }
  if (order % 2 == 1) nodes[order / 2] = 0.0;

  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    double pn, dpn;
    const double w = 1.0 / detail::hermite_christoffel(order, nodes[i], pn, dpn);
    rule.nodes[static_cast<std::size_t>(i)] = nodes[i];
    rule.weights[static_cast<std::size_t>(i)] = w;
    total += w;
  }
  for (auto& w : rule.weights) w /= total;
  for (int i = 0; i < order / 2; ++i) {
    auto& lo = rule.weights[static_cast<std::size_t>(i)];
    auto& hi = rule.weights[static_cast<std::size_t>(order - 1 - i)];
    lo = hi = 0.5 * (lo + hi);
  }
  return rule;
}

/// Shared immutable rule per order; constructed once.
inline const QuadratureRule& gh_rule_cached(int order) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, gh_rule(order)).first;
  return it->second;
}

/// Gauss-Legendre rule on [-1, 1]; weights sum to 2.
inline QuadratureRule gauss_legendre_rule(int order) {
  if (order < 1 || order > kMaxHermiteOrder)
    throw Error(ErrorCode::OrderOutOfRange, "Gauss-Legendre order must be in [1, 200]");
  QuadratureRule rule;
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(order - 1);
  for (int j = 1; j < order; ++j) off[j - 1] = j / std::sqrt(4.0 * j * j - 1.0);
  Eigen::VectorXd nodes, v0;
  detail::golub_welsch(diag, off, nodes, v0);
  rule.nodes.assign(nodes.data(), nodes.data() + order);
  rule.weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) rule.weights[static_cast<std::size_t>(i)] = 2.0 * v0[i] * v0[i];
  return rule;
}

/// Half-range Gauss-Hermite rule: weight proportional to exp(-u^2 / 2) on
/// [0, inf), weights summing to one. The recurrence coefficients come from a
/// fine Gauss-Legendre discretisation of the weight on [0, 40].
inline QuadratureRule half_gh_rule(int order) {
  if (order < 1 || order > kMaxHermiteOrder / 2)
    throw Error(ErrorCode::OrderOutOfRange, "half-range order must be in [1, 100]");
  const QuadratureRule gl = gauss_legendre_rule(20);
  constexpr int panels = 400;
  constexpr double upper = 40.0;
  const double h = upper / panels;
  std::vector<double> x, w;
  x.reserve(panels * 20);
  w.reserve(panels * 20);
  double total = 0.0;
  for (int p = 0; p < panels; ++p)
    for (int j = 0; j < gl.order(); ++j) {
      const double u = p * h + 0.5 * h * (gl.nodes[static_cast<std::size_t>(j)] + 1.0);
      x.push_back(u);
      w.push_back(0.5 * h * gl.weights[static_cast<std::size_t>(j)] * std::exp(-0.5 * u * u));
      total += w.back();
    }
  for (double& v : w) v /= total;

  // Lanczos on diag(x) started from sqrt(w), with full reorthogonalisation;
  // this yields the Jacobi matrix of the discrete measure stably.
  const auto n_pts = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::VectorXd> xs(x.data(), n_pts);
  Eigen::MatrixXd basis(n_pts, order);
  basis.col(0) = Eigen::Map<const Eigen::VectorXd>(w.data(), n_pts).cwiseSqrt();
  Eigen::VectorXd diag(order), off(order);
  for (int k = 0; k < order; ++k) {
    Eigen::VectorXd z = xs.cwiseProduct(basis.col(k));
    diag[k] = basis.col(k).dot(z);
    for (int pass = 0; pass < 2; ++pass) z -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * z);
    off[k] = z.norm();
    if (k + 1 < order) basis.col(k + 1) = z / off[k];
  }

  QuadratureRule rule;
  if (order == 1) {
    rule.nodes = {diag[0]};
    rule.weights = {1.0};
    return rule;
  }
  // Eigenvalues give the nodes; Newton on the recurrence polishes them and
  // the Christoffel numbers give weights with full relative accuracy (the
  // eigenvector route loses the tiny outer weights).
  Eigen::VectorXd nodes, v0;
  detail::golub_welsch(diag, off.head(order - 1), nodes, v0);
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  double wsum = 0.0;
  for (int i = 0; i < order; ++i) {
    double u = nodes[i], qn = 0.0, dqn = 0.0;
    for (int it = 0; it < 5; ++it) {
      detail::jacobi_christoffel(diag, off, order, u, qn, dqn);
      if (dqn == 0.0) break;
      const double step = qn / dqn;
      u -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(u))) break;
    }
    const double w = 1.0 / detail::jacobi_christoffel(diag, off, order, u, qn, dqn);
    rule.nodes[static_cast<std::size_t>(i)] = u;
    rule.weights[static_cast<std::size_t>(i)] = w;
    wsum += w;
  }
  for (double& v : rule.weights) v /= wsum;
  return rule;
}

/// Rule for the random-effect integral of the likelihood: a half-range
/// Gauss-Hermite rule applied on each side of the posterior mode, so an
/// order-n rule evaluates the integrand at n points (n rounded up to even).
struct LikelihoodRule {
  QuadratureRule half;

  int order() const { return 2 * half.order(); }
};

inline LikelihoodRule likelihood_rule(int order) {
  if (order < 1 || order > kMaxHermiteOrder)
    throw Error(ErrorCode::OrderOutOfRange, "likelihood quadrature order must be in [1, 200]");
  return {half_gh_rule((order + 1) / 2)};
}

inline const LikelihoodRule& likelihood_rule_cached(int order) {
  static std::mutex mutex;
  static std::map<int, LikelihoodRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, likelihood_rule(order)).first;
  return it->second;
}

namespace detail {
inline void check_finite(double v, double at) {
  if (!std::isfinite(v))
    throw Error(ErrorCode::NonFiniteIntegrand, "integrand not finite at b = " + std::to_string(at));
}
}  // namespace detail

/// E f(B) for B ~ N(mean, sd^2), using a probabilists' Gauss-Hermite rule.
template <class F>
double integrate_gaussian(F&& f, double mean, double sd, const QuadratureRule& rule) {
  if (!(sd >= 0.0)) throw Error(ErrorCode::NegativeSigma, "integrate_gaussian needs sd >= 0");
  if (sd == 0.0) {
    const double v = f(mean);
    detail::check_finite(v, mean);
    return v;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double b = mean + sd * rule.nodes[j];
    const double v = f(b);
    detail::check_finite(v, b);
    acc += rule.weights[j] * v;
  }
  return acc;
}

/// Discretisation of a random-effect law: E f(B) ~= sum_i weights_i f(points_i).
struct LawRule {
  std::vector<double> points;
  std::vector<double> weights;
};

namespace detail {

inline constexpr double kStudentTruncation = 1e-10;

// Uniform: composite Gauss-Legendre, 8 panels of 20 nodes.
inline LawRule uniform_law_rule(double h) {
  const auto& gl = gauss_legendre_rule(20);
  constexpr int panels = 8;
  LawRule out;
  const double width = 2.0 * h / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = -h + p * width;
    for (int j = 0; j < gl.order(); ++j) {
      out.points.push_back(lo + 0.5 * width * (gl.nodes[static_cast<std::size_t>(j)] + 1.0));
      out.weights.push_back(0.5 * width * gl.weights[static_cast<std::size_t>(j)] / (2.0 * h));
    }
  }
  return out;
}

// Student-t: substitute u = F(b) on [eps, 1/2], folded by symmetry, with
// Gauss-Legendre panels on log(u) per decade; renormalised by 1 - 2*eps.
inline LawRule student_t_law_rule(double df, double scale) {
  const auto& gl = gauss_legendre_rule(20);
  boost::math::students_t_distribution<double> dist(df);
  LawRule out;
  const double eps = kStudentTruncation;
  std::vector<double> edges;
  for (double u = eps; u < 0.1; u *= 10.0) edges.push_back(std::log(u));
  edges.push_back(std::log(0.1));
  edges.push_back(std::log(0.5));
  const double mass = 1.0 - 2.0 * eps;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double lo = edges[p], hi = edges[p + 1];
    for (int j = 0; j < gl.order(); ++j) {
      const double t = lo + 0.5 * (hi - lo) * (gl.nodes[static_cast<std::size_t>(j)] + 1.0);
      const double u = std::exp(t);
      const double w = 0.5 * (hi - lo) * gl.weights[static_cast<std::size_t>(j)] * u / mass;
      const double b = scale * boost::math::quantile(dist, u);
      out.points.push_back(b);
      out.weights.push_back(w);
      out.points.push_back(-b);
      out.weights.push_back(w);
    }
  }
  return out;
}

}  // namespace detail

/// Builds the discrete rule used for expectations under `law`. Normal laws
/// use the supplied Gauss-Hermite rule scaled by the law's SD.
inline LawRule law_rule(const TrueLaw& law, const QuadratureRule& gh) {
  struct Build {
    const QuadratureRule& gh;
    LawRule operator()(const NormalLaw& l) const {
      LawRule out;
      out.weights = gh.weights;
      out.points.reserve(gh.nodes.size());
      for (double z : gh.nodes) out.points.push_back(l.sd * z);
      return out;
    }
    LawRule operator()(const TwoPointLaw& l) const { return {{l.a, l.b}, {l.p, 1.0 - l.p}}; }
    LawRule operator()(const StudentTLaw& l) const { return detail::student_t_law_rule(l.df, l.scale); }
    LawRule operator()(const UniformLaw& l) const { return detail::uniform_law_rule(l.halfwidth); }
  };
  return std::visit(Build{gh}, law.kind());
}

template <class F>
double integrate_with(F&& f, const LawRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    const double v = f(rule.points[i]);
    detail::check_finite(v, rule.points[i]);
    acc += rule.weights[i] * v;
  }
  return acc;
}

/// E f(b) for b drawn from `law`.
template <class F>
double integrate_law(F&& f, const TrueLaw& law, const QuadratureRule& rule) {
  return integrate_with(std::forward<F>(f), law_rule(law, rule));
}

}  // namespace clp
