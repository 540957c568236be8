#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "grpadmm/csv.hpp"
#include "grpadmm/problems.hpp"
#include "grpadmm/run.hpp"
#include "grpadmm/serialize.hpp"
#include "grpadmm/solver.hpp"

namespace grpadmm {

/// Named numeric parameters of a step rule: tau0, beta, psi, mu, rho, r, r1,
/// sigma, tau, tau_max, t (T = tI), lambda_bar, lambda_min_s.
using ParamMap = std::map<std::string, double>;

/// Parameter presets from the published experiments. Unstated values
/// (tau0 for the transport problem) default to 1.
inline ParamMap paper_preset(ProblemKind kind, Algorithm algorithm) {
  const double phi = kGoldenRatio;
  switch (kind) {
    case ProblemKind::lasso:
      switch (algorithm) {
        case Algorithm::alg2: return {{"psi", 1.60}, {"beta", 7}, {"r", 0.50}, {"r1", 0.45}, {"tau0", 1}};
        case Algorithm::alg1: return {{"psi", 1.60}, {"beta", 7}, {"mu", 0.7}, {"tau0", 1}};
        case Algorithm::grp_fixed: return {{"psi", phi}, {"sigma", 2}};
        case Algorithm::padmm: return {{"sigma", 2}};
      }
      break;
    case ProblemKind::rof:
      switch (algorithm) {
        case Algorithm::alg2: return {{"psi", 1.60}, {"beta", 8}, {"r", 0.48}, {"r1", 0.42}, {"tau0", 1}};
        case Algorithm::alg1: return {{"psi", phi}, {"beta", 20}, {"mu", 0.8}, {"tau0", 1}};
        case Algorithm::grp_fixed: return {{"psi", phi}, {"sigma", 10}};
        case Algorithm::padmm: return {{"sigma", 15}};
      }
      break;
    case ProblemKind::deblur:
      switch (algorithm) {
        case Algorithm::alg2: return {{"psi", 1.60}, {"beta", 10}, {"r", 0.50}, {"r1", 0.45}, {"tau0", 10}};
        case Algorithm::alg1: return {{"psi", phi}, {"beta", 20}, {"mu", 0.8}, {"tau0", 10}};
        case Algorithm::grp_fixed: return {{"psi", phi}, {"sigma", 10}};
        case Algorithm::padmm: return {{"sigma", 15}};
      }
      break;
    case ProblemKind::uot:
      switch (algorithm) {
        case Algorithm::alg2: return {{"psi", 1.60}, {"beta", 1}, {"r", 0.48}, {"r1", 0.45}, {"tau0", 1}};
        case Algorithm::alg1: return {{"psi", phi}, {"beta", 0.5}, {"mu", 0.7}, {"tau0", 1}};
        case Algorithm::grp_fixed: return {{"psi", phi}, {"sigma", 1}};
        case Algorithm::padmm: return {{"sigma", 1}};
      }
      break;
  }
  throw std::logic_error("paper_preset: unhandled combination");
}

inline constexpr std::array<Algorithm, 4> kAllAlgorithms{Algorithm::alg2, Algorithm::alg1, Algorithm::grp_fixed,
                                                         Algorithm::padmm};

namespace detail {

inline double take(const ParamMap& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument("missing parameter '" + key + "'");
  return it->second;
}

inline double take_or(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline void reject_unknown(const ParamMap& p, std::initializer_list<const char*> allowed, Algorithm a) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  ok.insert("t");
  for (const auto& [key, value] : p) {
    if (!ok.count(key)) throw std::invalid_argument("parameter '" + key + "' does not apply to " + to_string(a));
  }
}

}  // namespace detail

/// Builds and validates a rule. Fixed-step rules without an explicit tau use
/// tau = psi/(sigma ||A||^2) (GrpADMM) or 1/(sigma ||A||^2) (PADMM).
inline StepRule make_rule(Algorithm algorithm, const ParamMap& p, std::optional<double> op_norm = std::nullopt) {
  using detail::take;
  using detail::take_or;
  auto fixed_tau = [&](double numerator, double sigma) {
    if (p.count("tau")) return p.at("tau");
    if (!op_norm || !(*op_norm > 0.0)) throw std::invalid_argument("fixed step needs tau or a positive ||A||");
    return numerator / (sigma * *op_norm * *op_norm);
  };
  switch (algorithm) {
    case Algorithm::grp_fixed: {
      detail::reject_unknown(p, {"psi", "sigma", "tau"}, algorithm);
      const double psi = take_or(p, "psi", kGoldenRatio);
      const double sigma = take(p, "sigma");
      return FixedStep::make(fixed_tau(psi, sigma), sigma, psi);
    }
    case Algorithm::padmm: {
      detail::reject_unknown(p, {"sigma", "tau"}, algorithm);
      const double sigma = take(p, "sigma");
      return FixedStep::make(fixed_tau(1.0, sigma), sigma);
    }
    case Algorithm::alg1:
      detail::reject_unknown(p, {"tau0", "beta", "psi", "mu", "lambda_min_s"}, algorithm);
      return DecreasingStep::make(take(p, "tau0"), take(p, "beta"), take(p, "psi"), take(p, "mu"),
                                  take_or(p, "lambda_min_s", 1.0));
    case Algorithm::alg2: {
      detail::reject_unknown(p, {"tau0", "beta", "psi", "rho", "r", "r1", "lambda_bar", "tau_max"}, algorithm);
      const double psi = take(p, "psi");
      return IncreasingStep::make(take(p, "tau0"), take(p, "beta"), psi,
                                  take_or(p, "rho", IncreasingStep::max_rho(psi)), take(p, "r"), take(p, "r1"),
                                  take_or(p, "lambda_bar", 1.0), default_xi, take_or(p, "tau_max", kInf));
    }
  }
  throw std::logic_error("make_rule: unhandled algorithm");
}

/// ||A|| by power iteration with the harness defaults.
inline double operator_norm(const SplitProblem& problem) {
  return estimate_spectral_norm(problem.A, 1e-9, 5000, 0);
}

struct RunConfig {
  ProblemSpec problem;
  Algorithm algorithm = Algorithm::alg2;
  ParamMap params;  // overrides applied on top of the preset
  bool use_paper_preset = true;
  long iters = 2000;
  std::uint64_t seed = 0;
  std::string out;
  long cadence = 0;  // 0 = default_cadence(problem)

  ParamMap resolved_params() const {
    ParamMap p = use_paper_preset ? paper_preset(problem.kind, algorithm) : ParamMap{};
    for (const auto& [k, v] : params) p[k] = v;
    if (algorithm == Algorithm::alg2 && !params.count("rho") && p.count("psi")) {
      p["rho"] = IncreasingStep::max_rho(p["psi"]);
    }
    return p;
  }

  /// Weight t of the w-block proximal term T = tI (parameter "t", default 0).
  double t_weight() const { return detail::take_or(params, "t", 0.0); }

  StepRule rule(std::optional<double> op_norm) const {
    ParamMap p = resolved_params();
    p.erase("t");
    return make_rule(algorithm, p, op_norm);
  }
};

/// Resolved parameters actually used by the rule, for echoing into reports.
inline json params_json(const StepRule& rule, double t_weight) {
  json j;
  std::visit(
      [&j](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FixedStep>) {
          j = {{"tau", r.tau}, {"sigma", r.sigma}, {"psi", r.psi}};
        } else if constexpr (std::is_same_v<T, DecreasingStep>) {
          j = {{"tau0", r.tau0}, {"beta", r.beta}, {"psi", r.psi}, {"mu", r.mu}, {"lambda_min_s", r.lambda_min_s}};
        } else {
          j = {{"tau0", r.tau0}, {"beta", r.beta}, {"psi", r.psi}, {"rho", r.rho}, {"r", r.r},
               {"r1", r.r1},     {"lambda_bar", r.lambda_bar}, {"xi", "1/(j+1)^1.01"}};
          if (std::isfinite(r.tau_max)) j["tau_max"] = r.tau_max;
          else j["tau_max"] = "inf";
        }
      },
      rule);
  j["t"] = t_weight;
  return j;
}

// ---------------------------------------------------------------------------
// Reference solve

struct ReferenceSolution {
  double objective = kInf;
  double fes_gap = kInf;
  Vector x, w, y;
  long iterations = 0;
  bool converged = false;
};

/// Default fixed-step sigma per problem kind (the GrpADMM preset).
inline double reference_sigma(const SplitProblem& problem) {
  if (problem.name == "lasso") return 2.0;
  if (problem.name == "rof" || problem.name == "deblur") return 10.0;
  return 1.0;
}

/// Fixed-step GrpADMM with psi = phi and tau = 0.99 psi/(sigma ||A||^2).
/// Stops once fes_gap < tol and the objective changed by less than tol.
inline ReferenceSolution reference_solve(const SplitProblem& problem, long iters, double tol,
                                         std::optional<double> sigma = std::nullopt,
                                         std::optional<double> op_norm = std::nullopt) {
  if (iters < 1) throw std::invalid_argument("reference_solve: iters must be >= 1");
  const double s = sigma.value_or(reference_sigma(problem));
  const double norm_a = op_norm.value_or(operator_norm(problem));
  const double tau = 0.99 * kGoldenRatio / (s * norm_a * norm_a);
  Solver solver(problem, Algorithm::grp_fixed, FixedStep::make(tau, s, kGoldenRatio));
  ReferenceSolution out;
  double prev = kInf;
  for (long k = 1; k <= iters; ++k) {
    solver.step();
    const auto& st = solver.state();
    const double phi = objective(problem, st.x, st.w);
    const double fes = st.residual.norm();
    out.iterations = k;
    if (fes < tol && std::abs(phi - prev) < tol) {
      out.converged = true;
      break;
    }
    prev = phi;
  }
  const auto& st = solver.state();
  out.x = st.x;
  out.w = st.w;
  out.y = st.y;
  out.objective = objective(problem, st.x, st.w);
  out.fes_gap = st.residual.norm();
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

struct ComparisonReport {
  double phi_star = kInf;
  bool absolute_gap = false;  // set when phi_star == 0
  std::vector<std::string> names;
  std::vector<RunTrace> traces;
  std::vector<json> params;
  std::optional<ReferenceSolution> reference;
};

/// rel_gap = |phi - phi*| / |phi*|, or the absolute gap when phi* == 0.
inline double relative_gap(double phi, double phi_star) {
  if (phi_star == 0.0) return std::abs(phi - phi_star);
  return std::abs(phi - phi_star) / std::abs(phi_star);
}

inline void backfill_rel_gap(std::vector<RunTrace>& traces, double phi_star) {
  for (auto& t : traces)
    for (auto& row : t.rows) row.rel_gap = relative_gap(row.objective, phi_star);
}

struct CompareOptions {
  std::optional<std::string> out_dir;
  bool parallel = false;
  long reference_iters = 0;  // 0 = no reference run
  double reference_tol = 1e-10;
};

inline json summary_json(const ComparisonReport& report, const SplitProblem& problem) {
  json runs = json::object();
  for (std::size_t i = 0; i < report.traces.size(); ++i) {
    const RunTrace& t = report.traces[i];
    json r;
    const MetricsRow* last = t.rows.empty() ? nullptr : &t.rows.back();
    r["final_rel_gap"] = last && last->rel_gap ? json(*last->rel_gap) : json(nullptr);
    r["final_fes_gap"] = last ? json(last->fes_gap) : json(nullptr);
    r["final_psnr"] = last && last->psnr && std::isfinite(*last->psnr) ? json(*last->psnr) : json(nullptr);
    r["final_objective"] = last ? json(last->objective) : json(nullptr);
    r["best_objective"] = std::isfinite(t.best_objective) ? json(t.best_objective) : json(nullptr);
    r["status"] = to_string(t.status);
    if (!t.message.empty()) r["message"] = t.message;
    r["algorithm"] = to_string(t.algorithm);
    r["params"] = report.params[i];
    r["iterations"] = last ? last->k : 0;
    r["shrink_events"] = t.shrink_events;
    r["tau_max_bound"] = t.tau_cap_bound;
    r["csv"] = report.names[i] + ".csv";
    r["final_iterate"] = report.names[i] + ".final.json";
    runs[report.names[i]] = std::move(r);
  }
  json j{{"schema", "grpadmm-summary/1"},
         {"problem", problem.name},
         {"phi_star", report.phi_star},
         {"rel_gap_mode", report.absolute_gap ? "absolute" : "relative"},
         {"runs", std::move(runs)}};
  if (report.reference) {
    j["reference"] = {{"objective", report.reference->objective},
                      {"fes_gap", report.reference->fes_gap},
                      {"iterations", report.reference->iterations},
                      {"converged", report.reference->converged}};
  }
  return j;
}

/// Final iterate dump: x reshaped to the image or transport-plan grid.
inline json final_iterate_json(const SplitProblem& problem, const RunTrace& trace) {
  json j{{"name", trace.name}, {"algorithm", to_string(trace.algorithm)}};
  if (problem.image) {
    j["x"] = array_to_json(trace.x, problem.image->height, problem.image->width);
  } else if (auto sizes = problem.A.ot_sizes()) {
    j["x"] = array_to_json(trace.x, sizes->first, sizes->second);
  } else {
    j["x"] = array_to_json(trace.x);
  }
  j["w"] = array_to_json(trace.w);
  return j;
}

inline void write_report(const ComparisonReport& report, const SplitProblem& problem, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < report.traces.size(); ++i) {
    const auto base = std::filesystem::path(dir) / report.names[i];
    write_csv_file(base.string() + ".csv", report.traces[i].rows);
    std::ofstream(base.string() + ".final.json") << final_iterate_json(problem, report.traces[i]).dump() << '\n';
  }
  std::ofstream os(std::filesystem::path(dir) / "summary.json");
  if (!os) throw std::runtime_error("cannot write summary.json in " + dir);
  os << summary_json(report, problem).dump(2) << '\n';
}

/// Runs every config on the shared problem, then fills rel_gap against the
/// pooled best objective phi* = min over runs and iterations.
inline ComparisonReport compare(const SplitProblem& problem, const std::vector<RunConfig>& configs,
                                const CompareOptions& options = {}) {
  if (configs.empty()) throw std::invalid_argument("compare: no configurations");
  const double norm_a = operator_norm(problem);

  // Validate every rule before any compute.
  std::vector<StepRule> rules;
  ComparisonReport report;
  std::map<std::string, int> seen;
  for (const auto& c : configs) {
    rules.push_back(c.rule(norm_a));
    report.params.push_back(params_json(rules.back(), c.t_weight()));
    std::string name = to_string(c.algorithm);
    if (int n = seen[name]++; n > 0) name += "-" + std::to_string(n + 1);
    report.names.push_back(name);
  }

  auto run_one = [&](std::size_t i) {
    RunOptions opts;
    opts.iters = configs[i].iters;
    opts.cadence = configs[i].cadence > 0 ? configs[i].cadence : default_cadence(problem);
    opts.solver.t_weight = configs[i].t_weight();
    RunTrace t = run(problem, configs[i].algorithm, rules[i], opts);
    t.name = report.names[i];
    return t;
  };

  if (options.parallel) {
    std::vector<std::future<RunTrace>> futures;
    for (std::size_t i = 0; i < configs.size(); ++i) futures.push_back(std::async(std::launch::async, run_one, i));
    for (auto& f : futures) report.traces.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) report.traces.push_back(run_one(i));
  }

  for (const auto& t : report.traces) {
    if (std::isfinite(t.best_objective)) report.phi_star = std::min(report.phi_star, t.best_objective);
  }
  report.absolute_gap = report.phi_star == 0.0;
  if (std::isfinite(report.phi_star)) backfill_rel_gap(report.traces, report.phi_star);

  if (options.reference_iters > 0) {
    report.reference = reference_solve(problem, options.reference_iters, options.reference_tol, std::nullopt, norm_a);
  }
  if (options.out_dir) write_report(report, problem, *options.out_dir);
  return report;
}

/// One config per algorithm with its default preset.
inline std::vector<RunConfig> paper_configs(const ProblemSpec& spec, long iters) {
  std::vector<RunConfig> out;
  for (Algorithm a : kAllAlgorithms) {
    RunConfig c;
    c.problem = spec;
    c.algorithm = a;
    c.iters = iters;
    c.seed = spec.seed;
    out.push_back(c);
  }
  return out;
}

}  // namespace grpadmm
