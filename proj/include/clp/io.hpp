#pragma once

// CSV readers and writers. Column schemas are documented in docs/formats.md.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "clp/asymptotics.hpp"
#include "clp/error.hpp"
#include "clp/laplace.hpp"
#include "clp/likelihood.hpp"
#include "clp/sim.hpp"

namespace clp::io {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": invalid " + what + " '" + s + "'");
  }
}

}  // namespace detail

/// Reads `item,x,y` rows (one per observation, items contiguous).
inline Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "line 1: missing header 'item,x,y'");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "item,x,y") throw Error(ErrorCode::ParseError, "line 1: expected header 'item,x,y', got '" + line + "'");

  std::vector<ClusterData> clusters;
  std::unordered_set<std::string> finished;
  std::string current;
  double current_x = 0.0;
  std::vector<int> ys;
  bool open = false;
  const auto close = [&] {
    if (!open) return;
    clusters.emplace_back(current_x, std::move(ys));
    ys.clear();
    finished.insert(current);
    open = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 3)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 3 fields, got " +
                                             std::to_string(f.size()));
    const std::string& item = f[0];
    if (item.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": empty item id");
    const double x = detail::parse_double(f[1], lineno, "x");
    int y = 0;
    if (f[2] == "0")
      y = 0;
    else if (f[2] == "1")
      y = 1;
    else
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": y must be 0 or 1, got '" + f[2] + "'");

    if (!open || item != current) {
      close();
      if (finished.count(item))
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": rows of item '" + item +
                                               "' are not contiguous");
      current = item;
      current_x = x;
      open = true;
    } else if (x != current_x) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": covariate changes within item '" +
                                             item + "'");
    }
    ys.push_back(y);
  }
  close();
  if (clusters.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": no data rows");
  const int m = clusters.front().m();
  for (const auto& c : clusters)
    if (c.m() != m) throw Error(ErrorCode::ParseError, "clusters have different sizes; a common m is required");
  return Dataset(std::move(clusters));
}

inline Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open '" + path + "'");
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  out << "item,x,y\n";
  std::size_t i = 0;
  for (const auto& c : data.clusters()) {
    ++i;
    for (int y : c.y()) out << i << ',' << fmt(c.x()) << ',' << y << '\n';
  }
}

inline void write_fit_header(std::ostream& out) { out << "estimator,alpha,beta,sigma,objective,converged\n"; }

inline void write_fit_row(std::ostream& out, const std::string& estimator, const FitResult& r) {
  out << estimator << ',' << fmt(r.params.alpha) << ',' << fmt(r.params.beta) << ',' << fmt(r.params.sigma) << ','
      << fmt(r.objective) << ',' << (r.converged ? "true" : "false") << '\n';
}

inline void write_surface(std::ostream& out, const LimitSurface& s) {
  out << "m,sigma_tilde,alpha_limit,beta_limit,score_norm\n";
  for (std::size_t i = 0; i < s.m_values.size(); ++i)
    for (std::size_t j = 0; j < s.sigma_tilde_values.size(); ++j) {
      const auto& p = s.limits[i][j];
      const bool bad = s.failed[i][j];
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out << s.m_values[i] << ',' << fmt(s.sigma_tilde_values[j]) << ',' << fmt(bad ? nan : p.alpha) << ','
          << fmt(bad ? nan : p.beta) << ',' << fmt(s.residual_score_norm[i][j]) << '\n';
    }
}

/// Same schema as the surface, for a single m.
inline void write_row(std::ostream& out, int m, const std::vector<double>& sigmas, const LimitRow& row) {
  out << "m,sigma_tilde,alpha_limit,beta_limit,score_norm\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < sigmas.size(); ++j) {
    const auto& p = row.limits[j];
    out << m << ',' << fmt(sigmas[j]) << ',' << fmt(row.failed[j] ? nan : p.alpha) << ','
        << fmt(row.failed[j] ? nan : p.beta) << ',' << fmt(row.score_norm[j]) << '\n';
  }
}

inline void write_gap_table(std::ostream& out, const std::vector<GapRow>& rows, const char* median_col,
                            const char* p90_col) {
  out << "m," << median_col << ',' << p90_col << ",n_rep,seed\n";
  for (const auto& r : rows) out << r.m << ',' << fmt(r.median) << ',' << fmt(r.p90) << ',' << r.n_rep << ',' << r.seed << '\n';
}

inline void write_sim_summary_header(std::ostream& out) {
  out << "rung,n,m,estimator,coordinate,mean,sd,se,limit,n_ok,replicates\n";
}

inline void write_sim_summary(std::ostream& out, int rung, const SimReport& rep) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& er : rep.estimators) {
    const auto line = [&](const char* coord, const CoordSummary& c, double limit) {
      out << rung << ',' << rep.config.n << ',' << rep.config.m << ',' << er.estimator.name() << ',' << coord << ','
          << fmt(c.mean) << ',' << fmt(c.sd) << ',' << fmt(c.se) << ',' << fmt(limit) << ',' << er.n_ok << ','
          << rep.config.replicates << '\n';
    };
    line("alpha", er.alpha, er.limit ? er.limit->alpha : nan);
    line("beta", er.beta, er.limit ? er.limit->beta : nan);
    if (!rep.config.fit_sigma.is_fixed()) line("sigma", er.sigma, er.limit ? er.limit->sigma : nan);
  }
}

inline void write_sim_replicates_header(std::ostream& out) {
  out << "rung,replicate,estimator,alpha,beta,sigma,converged\n";
}

inline void write_sim_replicates(std::ostream& out, int rung, const SimReport& rep) {
  for (const auto& er : rep.estimators)
    for (std::size_t r = 0; r < er.estimates.size(); ++r) {
      const auto& p = er.estimates[r];
      out << rung << ',' << r << ',' << er.estimator.name() << ',' << fmt(p.alpha) << ',' << fmt(p.beta) << ','
          << fmt(p.sigma) << ',' << (er.converged[r] ? "true" : "false") << '\n';
    }
}

}  // namespace clp::io
