// clprobit: pseudo-true limits, verification tables, simulation and fitting
// for the random-intercept probit model.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clp/clp.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Settings {
  double alpha0 = 0.5;
  double beta0 = 1.0;
  double sigma0 = 0.5;
  std::string law = "normal";
  double covariate_p = 0.5;
  std::string sigma_tilde;  // list or lo:hi:step; empty means command default
  std::string m;            // list
  std::string k;            // list
  int n = 200;
  int replicates = 50;
  std::uint64_t seed = 20240101;
  std::string out = ".";
  bool svg = false;
  int quad_order = clp::kDefaultLikelihoodOrder;
  int truth_order = clp::kDefaultTruthOrder;
  // command specific
  std::size_t max_failed_cells = 0;
  bool ladder = false;
  int rungs = 3;
  bool no_full = false;
  bool free_sigma = false;
  std::string data;
  std::string emit_dataset;
  std::optional<double> theta_alpha, theta_beta;
};

[[noreturn]] void config_error(const std::string& msg) { throw clp::Error(clp::ErrorCode::ConfigError, msg); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    config_error("not a number: '" + s + "'");
  }
}

int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != std::floor(v)) config_error("not an integer: '" + s + "'");
  return static_cast<int>(v);
}

/// Positive sigma values as "a,b,c" or "lo:hi:step".
std::vector<double> parse_real_grid(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) config_error("range must be lo:hi:step, got '" + s + "'");
    const double lo = to_double(parts[0]), hi = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || hi < lo) config_error("invalid range '" + s + "'");
    const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= count; ++i) out.push_back(std::round((lo + i * step) * 1e10) / 1e10);
  } else {
    for (const auto& p : split(s, ',')) out.push_back(to_double(p));
  }
  if (out.empty()) config_error("empty grid '" + s + "'");
  for (double v : out)
    if (!(v > 0.0)) config_error("sigma values must be > 0, got '" + s + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    out.push_back(to_int(p));
    if (out.back() < 1) config_error("list entries must be >= 1, got '" + s + "'");
  }
  if (out.empty()) config_error("empty list '" + s + "'");
  return out;
}

/// normal | t:DF[:SCALE] | uniform:HALFWIDTH | mixture:P,A[,B]
clp::TrueLaw parse_law(const Settings& st) {
  const auto colon = st.law.find(':');
  const std::string kind = st.law.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : st.law.substr(colon + 1);
  if (kind == "normal") return clp::TrueLaw::normal(st.sigma0);
  if (kind == "t") {
    const auto p = split(args, ':');
    if (p.empty() || p.size() > 2) config_error("law t needs t:DF[:SCALE]");
    const double df = to_double(p[0]);
    // Default scale matches the variance to sigma0^2.
    const double scale = p.size() == 2 ? to_double(p[1]) : st.sigma0 * std::sqrt((df - 2.0) / df);
    return clp::TrueLaw::student_t(df, scale);
  }
  if (kind == "uniform") {
    if (args.empty()) return clp::TrueLaw::uniform(st.sigma0 * std::sqrt(3.0));
    return clp::TrueLaw::uniform(to_double(args));
  }
  if (kind == "mixture") {
    const auto p = split(args, ',');
    if (p.size() == 2) return clp::TrueLaw::two_point_centered(to_double(p[0]), to_double(p[1]));
    if (p.size() == 3) return clp::TrueLaw::two_point(to_double(p[0]), to_double(p[1]), to_double(p[2]));
    config_error("law mixture needs mixture:P,A[,B]");
  }
  config_error("unknown law '" + st.law + "'");
}

clp::Truth make_truth(const Settings& st) {
  if (!(st.covariate_p > 0.0 && st.covariate_p < 1.0)) config_error("--covariate-p must lie in (0,1)");
  return clp::Truth(st.alpha0, st.beta0, parse_law(st), clp::CovariateLaw::bernoulli(st.covariate_p));
}

clp::QuadratureOrders orders(const Settings& st) { return {st.quad_order, st.truth_order}; }

json settings_json(const Settings& st) {
  json j;
  j["alpha0"] = st.alpha0;
  j["beta0"] = st.beta0;
  j["sigma0"] = st.sigma0;
  j["law"] = st.law;
  j["covariate_p"] = st.covariate_p;
  j["sigma_tilde"] = st.sigma_tilde;
  j["m"] = st.m;
  j["k"] = st.k;
  j["n"] = st.n;
  j["replicates"] = st.replicates;
  j["seed"] = st.seed;
  j["out"] = st.out;
  j["svg"] = st.svg;
  j["quad_order"] = st.quad_order;
  j["truth_order"] = st.truth_order;
  j["max_failed_cells"] = st.max_failed_cells;
  j["ladder"] = st.ladder;
  j["rungs"] = st.rungs;
  j["no_full"] = st.no_full;
  j["free_sigma"] = st.free_sigma;
  j["data"] = st.data;
  j["emit_dataset"] = st.emit_dataset;
  if (st.theta_alpha) j["theta_alpha"] = *st.theta_alpha;
  if (st.theta_beta) j["theta_beta"] = *st.theta_beta;
  return j;
}

/// Collects output files and writes the run manifest last.
class Run {
 public:
  Run(std::string command, const Settings& st)
      : command_(std::move(command)), settings_(st), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(st.out, ec);
    if (ec) config_error("cannot create output directory '" + st.out + "': " + ec.message());
  }

  fs::path path(const std::string& name) const { return fs::path(settings_.out) / name; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path p = path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) config_error("cannot write '" + p.string() + "'");
    body(out);
    out.close();
    outputs_.push_back(p.string());
  }

  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish() {
    json m;
    m["command"] = command_;
    m["config"] = settings_json(settings_);
    m["seeds"] = json::array({settings_.seed});
    m["tool_version"] = clp::kVersion;
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["outputs"] = outputs_;
    for (auto& [k, v] : extra_.items()) m[k] = v;
    std::ofstream out(path(command_ + ".manifest.json"));
    out << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  Settings settings_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

const char* kDefaultSigmaGrid = "0.1:1.5:0.05";

// ---------------------------------------------------------------------------

int cmd_limit_surface(const Settings& st) {
  const auto truth = make_truth(st);
  const auto ms = parse_int_list(st.m.empty() ? "1,2,4,8,16,32,64" : st.m);
  const auto sig = parse_real_grid(st.sigma_tilde.empty() ? kDefaultSigmaGrid : st.sigma_tilde);
  Run run("limit-surface", st);
  const auto surf = clp::limit_surface(truth, ms, sig, orders(st));
  run.write("limit_surface.csv", [&](std::ostream& o) { clp::io::write_surface(o, surf); });
  if (st.svg) {
    clp::svg::ContourSpec spec;
    spec.title = "Limit of alpha-hat as n grows";
    spec.xname = "m (log2 scale)";
    spec.yname = "sigma tilde";
    for (int m : ms) {
      spec.xs.push_back(std::log2(static_cast<double>(m)));
      spec.xlabels.push_back(std::to_string(m));
    }
    spec.ys = sig;
    spec.values.resize(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i)
      for (std::size_t j = 0; j < sig.size(); ++j)
        spec.values[i].push_back(surf.failed[i][j] ? NAN : surf.limits[i][j].alpha);
    for (double lv = 0.30; lv <= 0.80 + 1e-9; lv += 0.02) spec.levels.push_back(std::round(lv * 100) / 100);
    spec.dashed_x = {1.0};  // m = 2
    run.write("limit_surface.svg", [&](std::ostream& o) { o << clp::svg::contour_plot(spec); });
  }
  run.note("failed_cells", surf.failed_cells());
  run.finish();
  if (surf.failed_cells() > st.max_failed_cells) {
    std::cerr << "limit-surface: " << surf.failed_cells() << " cells failed (threshold " << st.max_failed_cells
              << ")\n";
    return kExitNumeric;
  }
  return 0;
}

int cmd_pairwise_curve(const Settings& st) {
  const auto truth = make_truth(st);
  const auto sig = parse_real_grid(st.sigma_tilde.empty() ? kDefaultSigmaGrid : st.sigma_tilde);
  Run run("pairwise-curve", st);
  const auto row = clp::pairwise_curve(truth, sig, orders(st));
  run.write("pairwise_curve.csv", [&](std::ostream& o) { clp::io::write_row(o, 2, sig, row); });
  std::size_t failed = 0;
  for (bool f : row.failed) failed += f ? 1 : 0;
  if (st.svg) {
    clp::svg::LineSpec spec;
    spec.title = "Limit of the pairwise estimator of alpha";
    spec.xname = "sigma tilde";
    spec.yname = "alpha limit";
    spec.xs = sig;
    for (std::size_t j = 0; j < sig.size(); ++j) spec.ys.push_back(row.failed[j] ? NAN : row.limits[j].alpha);
    spec.ref_y = {st.alpha0};
    spec.ref_x = {truth.params0.sigma};
    run.write("pairwise_curve.svg", [&](std::ostream& o) { o << clp::svg::line_plot(spec); });
  }
  run.note("failed_cells", failed);
  run.finish();
  return failed > st.max_failed_cells ? kExitNumeric : 0;
}

int cmd_kwise_limit(const Settings& st) {
  const auto truth = make_truth(st);
  const auto ks = parse_int_list(st.k.empty() ? "2" : st.k);
  const auto sig = parse_real_grid(st.sigma_tilde.empty() ? kDefaultSigmaGrid : st.sigma_tilde);
  Run run("kwise-limit", st);
  std::size_t failed = 0;
  std::ostringstream body;
  body << "k,sigma_tilde,alpha_limit,beta_limit,score_norm\n";
  for (int k : ks) {
    if (k < 1) config_error("k must be >= 1");
    const auto row = clp::limit_row(truth, k, sig, orders(st));
    for (std::size_t j = 0; j < sig.size(); ++j) {
      const double nan = NAN;
      body << k << ',' << clp::io::fmt(sig[j]) << ',' << clp::io::fmt(row.failed[j] ? nan : row.limits[j].alpha)
           << ',' << clp::io::fmt(row.failed[j] ? nan : row.limits[j].beta) << ','
           << clp::io::fmt(row.score_norm[j]) << '\n';
      failed += row.failed[j] ? 1 : 0;
    }
  }
  run.write("kwise_limit.csv", [&](std::ostream& o) { o << body.str(); });
  run.note("failed_cells", failed);
  run.finish();
  return failed > st.max_failed_cells ? kExitNumeric : 0;
}

clp::Params lemma_theta(const Settings& st) {
  const double sigma = st.sigma_tilde.empty() ? 1.0 : to_double(st.sigma_tilde);
  if (!(sigma > 0.0)) config_error("--sigma-tilde must be > 0");
  return clp::Params::free_sigma(st.theta_alpha.value_or(st.alpha0), st.theta_beta.value_or(st.beta0), sigma);
}

int cmd_gap_table(const Settings& st, bool lemma1) {
  const auto truth = make_truth(st);
  const auto ms = parse_int_list(st.m.empty() ? "4,16,64,256" : st.m);
  const auto theta = lemma_theta(st);
  const auto& rule = clp::likelihood_rule_cached(st.quad_order);
  const char* command = lemma1 ? "verify-lemma1" : "laplace-error";
  Run run(command, st);
  const int n_rep = st.replicates;
  if (lemma1) {
    const auto rows = clp::lemma1_gap(theta, truth, ms, n_rep, st.seed, rule);
    run.write("lemma1_gap.csv", [&](std::ostream& o) { clp::io::write_gap_table(o, rows, "median_gap", "p90_gap"); });
  } else {
    const auto rows = clp::laplace_error(theta, truth, ms, n_rep, st.seed, rule);
    run.write("laplace_error.csv",
              [&](std::ostream& o) { clp::io::write_gap_table(o, rows, "median_abs_error", "p90_abs_error"); });
  }
  run.note("theta", json{{"alpha", theta.alpha}, {"beta", theta.beta}, {"sigma", theta.sigma}});
  run.finish();
  return 0;
}

std::vector<clp::Estimator> estimators(const Settings& st, int m) {
  std::vector<clp::Estimator> out;
  if (!st.no_full) out.push_back(clp::Estimator::full());
  if (!st.k.empty())
    for (int k : parse_int_list(st.k)) {
      if (k < 1 || k > m) config_error("k = " + std::to_string(k) + " must satisfy 1 <= k <= m");
      out.push_back(clp::Estimator::kwise(k));
    }
  if (out.empty()) config_error("no estimators selected");
  return out;
}

clp::SigmaMode fit_sigma(const Settings& st) {
  if (st.free_sigma) return clp::SigmaMode::free_mode();
  const double s = st.sigma_tilde.empty() ? 1.0 : to_double(st.sigma_tilde);
  if (!(s > 0.0)) config_error("--sigma-tilde must be > 0");
  return clp::SigmaMode::fixed_at(s);
}

int cmd_simulate(const Settings& st) {
  const auto truth = make_truth(st);
  std::vector<clp::Rung> rungs;
  if (st.ladder) {
    rungs = clp::ladder(st.n, st.m.empty() ? 4 : parse_int_list(st.m).front(), st.rungs, 4);
  } else {
    rungs.push_back({st.n, st.m.empty() ? 16 : parse_int_list(st.m).front()});
  }
  Run run("simulate", st);
  std::vector<clp::SimReport> reports;
  json rung_meta = json::array();
  for (std::size_t i = 0; i < rungs.size(); ++i) {
    clp::SimConfig cfg;
    cfg.truth = truth;
    cfg.n = rungs[i].n;
    cfg.m = rungs[i].m;
    cfg.estimators = estimators(st, cfg.m);
    cfg.replicates = st.replicates;
    cfg.seed = clp::stream_seed(st.seed, {static_cast<std::uint64_t>(i)});
    cfg.fit_sigma = fit_sigma(st);
    cfg.quad_order = st.quad_order;
    reports.push_back(clp::run_experiment(cfg));
    rung_meta.push_back({{"rung", i}, {"n", cfg.n}, {"m", cfg.m}, {"seed", cfg.seed}});
  }
  run.write("simulate_summary.csv", [&](std::ostream& o) {
    clp::io::write_sim_summary_header(o);
    for (std::size_t i = 0; i < reports.size(); ++i) clp::io::write_sim_summary(o, static_cast<int>(i), reports[i]);
  });
  run.write("simulate_replicates.csv", [&](std::ostream& o) {
    clp::io::write_sim_replicates_header(o);
    for (std::size_t i = 0; i < reports.size(); ++i) clp::io::write_sim_replicates(o, static_cast<int>(i), reports[i]);
  });
  json meta;
  meta["config"] = settings_json(st);
  meta["truth_law"] = truth.law.describe();
  meta["rungs"] = rung_meta;
  meta["ladder_rule"] = st.ladder ? "n and m multiplied by 4 per rung" : "single rung";
  meta["replicate_streams"] = "dataset for replicate r of rung i uses stream (stream(seed, i), r)";
  meta["tool_version"] = clp::kVersion;
  run.write("simulate.json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
  if (!st.emit_dataset.empty()) {
    const auto data = clp::simulate_dataset(truth, rungs.front().n, rungs.front().m,
                                            clp::stream_seed(reports.front().config.seed, {0}));
    std::ofstream o(st.emit_dataset);
    if (!o) config_error("cannot write '" + st.emit_dataset + "'");
    clp::io::write_dataset(o, data);
  }
  run.finish();
  return 0;
}

int cmd_fit(const Settings& st) {
  if (st.data.empty()) config_error("--data is required");
  const auto data = clp::io::read_dataset_file(st.data);
  const auto ests = estimators(st, data.m());
  const auto& rule = clp::likelihood_rule_cached(st.quad_order);
  const auto mode = fit_sigma(st);
  Run run("fit", st);
  std::vector<std::pair<std::string, clp::FitResult>> results;
  bool numeric_failure = false;
  for (const auto& e : ests) {
    const auto r = clp::fit(data, e.scheme(), mode, rule);
    numeric_failure = numeric_failure || !r.converged || r.boundary;
    results.emplace_back(e.name(), r);
  }
  run.write("fit.csv", [&](std::ostream& o) {
    clp::io::write_fit_header(o);
    for (const auto& [name, r] : results) clp::io::write_fit_row(o, name, r);
  });
  json flags = json::array();
  for (const auto& [name, r] : results)
    flags.push_back({{"estimator", name}, {"multimodal", r.multimodal}, {"boundary", r.boundary},
                     {"iterations", r.iterations}});
  run.note("fits", flags);
  run.note("n", data.n());
  run.note("m", data.m());
  run.finish();
  return numeric_failure ? kExitNumeric : 0;
}

// ---------------------------------------------------------------------------

/// A JSON list value as the comma-separated string the flags accept.
std::string list_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_array()) return v.dump();
  std::string out;
  for (const auto& e : v) {
    if (!e.is_number()) config_error("list entries must be numbers");
    if (!out.empty()) out += ',';
    out += e.dump();
  }
  return out;
}

/// Applies keys of a JSON config file to settings whose flags were not given.
void apply_config(const std::string& path, Settings& st, CLI::App& sub) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    config_error(std::string("invalid JSON config: ") + e.what());
  }
  const auto given = [&](const std::string& flag) {
    try {
      return sub.count(flag) > 0;
    } catch (const CLI::OptionNotFound&) {
      return true;  // option not available on this command; ignore key
    }
  };
  const std::map<std::string, std::pair<std::string, std::function<void(const json&)>>> table{
      {"alpha0", {"--alpha0", [&](const json& v) { st.alpha0 = v.get<double>(); }}},
      {"beta0", {"--beta0", [&](const json& v) { st.beta0 = v.get<double>(); }}},
      {"sigma0", {"--sigma0", [&](const json& v) { st.sigma0 = v.get<double>(); }}},
      {"law", {"--law", [&](const json& v) { st.law = v.get<std::string>(); }}},
      {"covariate_p", {"--covariate-p", [&](const json& v) { st.covariate_p = v.get<double>(); }}},
      {"sigma_tilde", {"--sigma-tilde", [&](const json& v) { st.sigma_tilde = list_value(v); }}},
      {"m", {"--m", [&](const json& v) { st.m = list_value(v); }}},
      {"k", {"--k", [&](const json& v) { st.k = list_value(v); }}},
      {"n", {"--n", [&](const json& v) { st.n = v.get<int>(); }}},
      {"replicates", {"--replicates", [&](const json& v) { st.replicates = v.get<int>(); }}},
      {"seed", {"--seed", [&](const json& v) { st.seed = v.get<std::uint64_t>(); }}},
      {"out", {"--out", [&](const json& v) { st.out = v.get<std::string>(); }}},
      {"svg", {"--svg", [&](const json& v) { st.svg = v.get<bool>(); }}},
      {"quad_order", {"--quad-order", [&](const json& v) { st.quad_order = v.get<int>(); }}},
      {"truth_order", {"--truth-order", [&](const json& v) { st.truth_order = v.get<int>(); }}},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) config_error("unknown config key '" + key + "'");
    if (given(it->second.first)) continue;
    try {
      it->second.second(value);
    } catch (const json::exception& e) {
      config_error("config key '" + key + "': " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite vs full likelihood limits for the random-intercept probit model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", clp::kVersion);

  Settings st;
  std::string config_path;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--alpha0", st.alpha0, "true intercept")->capture_default_str();
    sub->add_option("--beta0", st.beta0, "true slope")->capture_default_str();
    sub->add_option("--sigma0", st.sigma0, "true random-effect SD")->capture_default_str();
    sub->add_option("--law", st.law, "random-effect law: normal | t:DF[:SCALE] | uniform[:H] | mixture:P,A[,B]")
        ->capture_default_str();
    sub->add_option("--covariate-p", st.covariate_p, "P(x = 1)")->capture_default_str();
    sub->add_option("--out", st.out, "output directory")->capture_default_str();
    sub->add_option("--quad-order", st.quad_order, "likelihood integral nodes, split evenly either side of the mode")
        ->capture_default_str();
    sub->add_option("--truth-order", st.truth_order, "Gauss-Hermite order of the truth expectation")
        ->capture_default_str();
  };

  auto* surface = app.add_subcommand("limit-surface", "pseudo-true alpha, beta over (m, sigma tilde)");
  common(surface);
  surface->add_option("--m", st.m, "cluster sizes, comma separated");
  surface->add_option("--sigma-tilde", st.sigma_tilde, "sigma tilde grid: list or lo:hi:step");
  surface->add_flag("--svg", st.svg, "also write a contour plot");
  surface->add_option("--max-failed-cells", st.max_failed_cells, "exit 3 above this many failed cells");

  auto* curve = app.add_subcommand("pairwise-curve", "limit of the pairwise estimator over sigma tilde");
  common(curve);
  curve->add_option("--sigma-tilde", st.sigma_tilde, "sigma tilde grid: list or lo:hi:step");
  curve->add_flag("--svg", st.svg, "also write a line plot");
  curve->add_option("--max-failed-cells", st.max_failed_cells, "exit 3 above this many failed points");

  auto* kwise = app.add_subcommand("kwise-limit", "limit of k-wise composite estimators");
  common(kwise);
  kwise->add_option("--k", st.k, "subset sizes, comma separated");
  kwise->add_option("--sigma-tilde", st.sigma_tilde, "sigma tilde grid: list or lo:hi:step");
  kwise->add_option("--max-failed-cells", st.max_failed_cells, "exit 3 above this many failed points");

  std::vector<CLI::App*> gap_cmds;
  for (const char* name : {"verify-lemma1", "laplace-error"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "verify-lemma1"
                                             ? "score gap between probit model and linear model for eta0"
                                             : "Laplace vs quadrature log-likelihood error");
    common(sub);
    sub->add_option("--m", st.m, "cluster sizes, comma separated");
    sub->add_option("--replicates", st.replicates, "simulated clusters per m")->capture_default_str();
    sub->add_option("--seed", st.seed, "random seed")->capture_default_str();
    sub->add_option("--sigma-tilde", st.sigma_tilde, "sigma of the evaluation point theta (default 1.0)");
    sub->add_option("--theta-alpha", st.theta_alpha, "alpha of the evaluation point (default alpha0)");
    sub->add_option("--theta-beta", st.theta_beta, "beta of the evaluation point (default beta0)");
    gap_cmds.push_back(sub);
  }

  auto* simulate = app.add_subcommand("simulate", "repeated fits on simulated data");
  common(simulate);
  simulate->add_option("--n", st.n, "clusters per dataset (first rung with --ladder)")->capture_default_str();
  simulate->add_option("--m", st.m, "cluster size (first rung with --ladder)");
  simulate->add_option("--k", st.k, "k-wise composite estimators to fit, comma separated");
  simulate->add_flag("--no-full", st.no_full, "skip the full-likelihood estimator");
  simulate->add_option("--replicates", st.replicates, "replicates per rung")->capture_default_str();
  simulate->add_option("--seed", st.seed, "random seed")->capture_default_str();
  simulate->add_option("--sigma-tilde", st.sigma_tilde, "fixed sigma used when fitting (default 1.0)");
  simulate->add_flag("--free-sigma", st.free_sigma, "estimate sigma instead of fixing it");
  simulate->add_flag("--ladder", st.ladder, "run rungs with n and m multiplied by 4 per rung");
  simulate->add_option("--rungs", st.rungs, "number of ladder rungs")->capture_default_str();
  simulate->add_option("--emit-dataset", st.emit_dataset, "write the first replicate's dataset as item,x,y CSV");

  auto* fitcmd = app.add_subcommand("fit", "fit full and/or k-wise estimators to an item,x,y CSV");
  common(fitcmd);
  fitcmd->add_option("--data", st.data, "input CSV with header item,x,y");
  fitcmd->add_option("--k", st.k, "k-wise composite estimators to fit, comma separated");
  fitcmd->add_flag("--no-full", st.no_full, "skip the full-likelihood estimator");
  fitcmd->add_option("--sigma-tilde", st.sigma_tilde, "fix sigma at this value (default: estimate sigma)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(config_path, st, *sub);
    if (sub == fitcmd && st.sigma_tilde.empty()) st.free_sigma = true;
    if (sub == surface) return cmd_limit_surface(st);
    if (sub == curve) return cmd_pairwise_curve(st);
    if (sub == kwise) return cmd_kwise_limit(st);
    if (sub == gap_cmds[0]) return cmd_gap_table(st, true);
    if (sub == gap_cmds[1]) return cmd_gap_table(st, false);
    if (sub == simulate) return cmd_simulate(st);
    if (sub == fitcmd) return cmd_fit(st);
  } catch (const clp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numeric() ? kExitNumeric : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
