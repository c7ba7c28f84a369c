#pragma once

// Small-dimension unconstrained minimisation: BFGS with backtracking and a
// Nelder-Mead fallback when the quasi-Newton update stalls.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "clp/error.hpp"

namespace clp::optim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Objective returning f(x) and writing grad f(x) into g.
using Objective = std::function<double(const Vec& x, Vec& g)>;

struct Options {
  double gtol = 1e-8;  // on the infinity norm of the gradient
  int max_iter = 500;
  double max_step = 2.0;
  int nelder_mead_iters = 400;
};

struct Result {
  Vec x;
  double f = std::numeric_limits<double>::infinity();
  Vec grad;
  bool converged = false;
  int iterations = 0;
  int fallbacks = 0;
};

namespace detail {

// Evaluations that throw or return non-finite values count as +inf.
inline double safe_eval(const Objective& fg, const Vec& x, Vec& g) {
  try {
    const double f = fg(x, g);
    if (!std::isfinite(f) || !g.allFinite()) return std::numeric_limits<double>::infinity();
    return f;
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

inline Vec nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, int max_iter,
                       double initial_step = 0.1) {
  const auto n = x0.size();
  std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += initial_step;
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(pts.size());
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <= 1e-15 * (1.0 + std::abs(vals[best]))) break;

    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Vec reflected = centroid + (centroid - pts[worst]);
    const double fr = f(reflected);
    if (fr < vals[best]) {
      const Vec expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
    } else {
      const Vec contracted = centroid + 0.5 * (pts[worst] - centroid);
      const double fc = f(contracted);
      if (fc < vals[worst]) {
        pts[worst] = contracted;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  const auto best = std::min_element(vals.begin(), vals.end()) - vals.begin();
  return pts[static_cast<std::size_t>(best)];
}

/// Minimises fg starting from x0.
inline Result bfgs(const Objective& fg, const Vec& x0, const Options& opt = {}) {
  const auto n = x0.size();
  Result res;
  res.x = x0;
  res.grad = Vec::Zero(n);
  res.f = detail::safe_eval(fg, res.x, res.grad);
  if (!std::isfinite(res.f)) throw Error(ErrorCode::NonFinite, "objective not finite at starting point");

  Mat hinv = Mat::Identity(n, n);
  bool identity = true;
  Vec g_new(n);

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    if (res.grad.lpNorm<Eigen::Infinity>() < opt.gtol) {
      res.converged = true;
      break;
    }
    Vec dir = -hinv * res.grad;
    double slope = res.grad.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      identity = true;
      dir = -res.grad;
      slope = res.grad.dot(dir);
    }
    const double len = dir.norm();
    if (len > opt.max_step) {
      dir *= opt.max_step / len;
      slope *= opt.max_step / len;
    }

    const double noise = 1e-13 * (1.0 + std::abs(res.f));
    const double gnorm = res.grad.lpNorm<Eigen::Infinity>();
    double t = 1.0;
    bool accepted = false;
    Vec x_new(n);
    double f_new = 0.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      x_new = res.x + t * dir;
      f_new = detail::safe_eval(fg, x_new, g_new);
      if (!std::isfinite(f_new)) continue;
      if (f_new <= res.f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      // Near the optimum f differences drown in rounding; accept steps that
      // do not measurably increase f while shrinking the gradient.
      if (f_new <= res.f + noise && g_new.lpNorm<Eigen::Infinity>() < gnorm) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (!identity) {
        hinv.setIdentity();
        identity = true;
        continue;
      }
      if (res.fallbacks >= 2) break;
      ++res.fallbacks;
      Vec scratch(n);
      const auto fonly = [&](const Vec& x) { return detail::safe_eval(fg, x, scratch); };
      const Vec xs = nelder_mead(fonly, res.x, opt.nelder_mead_iters);
      const double fs = detail::safe_eval(fg, xs, g_new);
      if (fs < res.f) {
        res.x = xs;
        res.f = fs;
        res.grad = g_new;
      }
      continue;
    }

    const Vec s = x_new - res.x;
    const Vec y = g_new - res.grad;
    res.x = x_new;
    res.f = f_new;
    res.grad = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm() && sy > 0.0) {
      if (identity) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Mat eye = Mat::Identity(n, n);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
      identity = false;
    }
  }
  if (!res.converged && res.grad.lpNorm<Eigen::Infinity>() < opt.gtol) res.converged = true;
  return res;
}

}  // namespace clp::optim
