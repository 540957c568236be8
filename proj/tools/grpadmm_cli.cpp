// Command-line driver: run one algorithm, compare all four, estimate ||A||,
// or write a generated problem to disk.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "grpadmm/grpadmm.hpp"

namespace {

using namespace grpadmm;

struct ProblemArgs {
  std::string kind = "lasso";
  std::string size;
  std::optional<double> lambda, gamma, noise, psf_sigma;
  std::optional<long> psf_size;
  std::uint64_t seed = 0;
  std::string problem_file;

  void add_to(CLI::App* app, bool with_seed = true) {
    app->add_option("--problem", kind, "Problem kind: lasso, rof, deblur, uot");
    app->add_option("--size", size, "Size as RxC: (m,n) for lasso, HxW for images, (n_s,n_t) for uot");
    app->add_option("--lambda", lambda, "Regularization weight");
    app->add_option("--gamma", gamma, "UOT marginal penalty");
    app->add_option("--noise", noise, "Noise standard deviation");
    app->add_option("--psf-size", psf_size, "Blur kernel size (odd)");
    app->add_option("--psf-sigma", psf_sigma, "Blur kernel standard deviation");
    app->add_option("--problem-file", problem_file, "Load a serialized problem instead of generating one");
    if (with_seed) app->add_option("--seed", seed, "Generator seed");
  }

  // A loaded problem file decides the kind, so presets follow the file.
  ProblemSpec spec(const SplitProblem* loaded = nullptr) const {
    const ProblemKind k = parse_problem_kind(loaded && !problem_file.empty() ? loaded->name : kind);
    ProblemSpec s = ProblemSpec::paper(k, seed);
    if (k == ProblemKind::deblur) s = ProblemSpec::desk(k, seed);
    if (!size.empty()) {
      const auto sep = size.find_first_of("x,");
      if (sep == std::string::npos) throw std::invalid_argument("--size must look like RxC");
      s.rows = std::stol(size.substr(0, sep));
      s.cols = std::stol(size.substr(sep + 1));
    }
    if (lambda) s.lambda = *lambda;
    if (gamma) s.gamma = *gamma;
    if (noise) s.noise = *noise;
    if (psf_size) s.psf_size = *psf_size;
    if (psf_sigma) s.psf_sigma = *psf_sigma;
    s.validate();
    return s;
  }

  SplitProblem load() const { return problem_file.empty() ? generate(spec()) : load_problem(problem_file); }
};

ParamMap parse_params(const std::vector<std::string>& raw) {
  ParamMap out;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
    const std::string value = kv.substr(eq + 1);
    out[kv.substr(0, eq)] = (value == "inf") ? kInf : std::stod(value);
  }
  return out;
}

int cmd_run(const ProblemArgs& pa, const std::string& algo, long iters, const std::string& preset,
            const std::vector<std::string>& raw_params, const std::string& out, long cadence,
            const std::string& dump) {
  const SplitProblem problem = pa.load();
  RunConfig cfg;
  cfg.problem = pa.spec(&problem);
  cfg.algorithm = parse_algorithm(algo);
  cfg.iters = iters;
  cfg.seed = pa.seed;
  cfg.use_paper_preset = preset == "paper";
  cfg.params = parse_params(raw_params);
  const bool fixed = cfg.algorithm == Algorithm::grp_fixed || cfg.algorithm == Algorithm::padmm;
  const std::optional<double> norm_a = fixed && !cfg.params.count("tau") ? std::optional(operator_norm(problem))
                                                                         : std::nullopt;
  const StepRule rule = cfg.rule(norm_a);

  RunOptions opts;
  opts.iters = iters;
  opts.cadence = cadence > 0 ? cadence : default_cadence(problem);
  opts.solver.t_weight = cfg.t_weight();
  const RunTrace trace = run(problem, cfg.algorithm, rule, opts);

  write_csv_file(out, trace.rows);
  if (!dump.empty()) std::ofstream(dump) << final_iterate_json(problem, trace).dump() << '\n';

  const MetricsRow& last = trace.rows.back();
  std::printf("%s on %s: k=%ld objective=%.10g fes_gap=%.3e tau=%.4g shrink_events=%ld status=%s\n",
              to_string(cfg.algorithm).c_str(), problem.name.c_str(), last.k, last.objective, last.fes_gap,
              last.tau, trace.shrink_events, to_string(trace.status).c_str());
  if (trace.status != RunStatus::completed) {
    std::fprintf(stderr, "run aborted: %s\n", trace.message.c_str());
    return 2;
  }
  return 0;
}

int cmd_compare(const ProblemArgs& pa, long iters, const std::string& out, long reference_iters, bool parallel) {
  const SplitProblem problem = pa.load();
  const auto configs = paper_configs(pa.spec(&problem), iters);
  CompareOptions opts;
  opts.out_dir = out;
  opts.parallel = parallel;
  opts.reference_iters = reference_iters;
  const ComparisonReport report = compare(problem, configs, opts);

  std::printf("phi* = %.12g (%s gap)\n", report.phi_star, report.absolute_gap ? "absolute" : "relative");
  bool aborted = false;
  for (std::size_t i = 0; i < report.traces.size(); ++i) {
    const auto& t = report.traces[i];
    aborted = aborted || t.status != RunStatus::completed;
    if (t.rows.empty()) {
      std::printf("  %-10s %s\n", report.names[i].c_str(), to_string(t.status).c_str());
      continue;
    }
    const auto& last = t.rows.back();
    std::printf("  %-10s rel_gap=%.3e fes_gap=%.3e", report.names[i].c_str(), last.rel_gap.value_or(kInf),
                last.fes_gap);
    if (last.psnr) std::printf(" psnr=%.2f", *last.psnr);
    std::printf(" %s\n", to_string(t.status).c_str());
  }
  if (report.reference) {
    std::printf("reference: objective=%.12g fes_gap=%.3e iterations=%ld converged=%s\n",
                report.reference->objective, report.reference->fes_gap, report.reference->iterations,
                report.reference->converged ? "yes" : "no");
  }
  std::printf("wrote %s/summary.json\n", out.c_str());
  return aborted ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Golden-ratio proximal ADMM solvers and benchmark harness"};
  app.require_subcommand(1);

  ProblemArgs run_pa, cmp_pa, norm_pa, gen_pa;
  std::string algo = "alg2", preset = "paper", run_out, run_dump, cmp_out, gen_out;
  std::vector<std::string> raw_params;
  long run_iters = 2000, cmp_iters = 2000, cadence = 0, reference_iters = 0;
  bool parallel = false;

  auto* run_cmd = app.add_subcommand("run", "Run one algorithm and write its metrics CSV");
  run_pa.add_to(run_cmd);
  run_cmd->add_option("--algo", algo, "grp-fixed, alg1, alg2 or padmm")->required();
  run_cmd->add_option("--iters", run_iters, "Iterations")->check(CLI::PositiveNumber);
  run_cmd->add_option("--preset", preset, "Parameter preset: paper or none")
      ->check(CLI::IsMember({"paper", "none"}));
  run_cmd->add_option("--param", raw_params, "Override a rule parameter, key=value (repeatable)");
  run_cmd->add_option("--out", run_out, "Output CSV path")->required();
  run_cmd->add_option("--cadence", cadence, "Record metrics every N iterations (default: automatic)");
  run_cmd->add_option("--dump-final", run_dump, "Write the final iterate as JSON");

  auto* cmp_cmd = app.add_subcommand("compare", "Run all four algorithms with their default presets");
  cmp_pa.add_to(cmp_cmd);
  cmp_cmd->add_option("--iters", cmp_iters, "Iterations per run")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--out", cmp_out, "Output directory")->required();
  cmp_cmd->add_option("--reference-iters", reference_iters, "Also run the fixed-step reference solver");
  cmp_cmd->add_flag("--parallel", parallel, "Run the four algorithms concurrently");

  auto* norm_cmd = app.add_subcommand("norm", "Print the estimated operator norm of A");
  norm_pa.add_to(norm_cmd);

  auto* gen_cmd = app.add_subcommand("generate", "Write a generated problem as JSON");
  gen_pa.add_to(gen_cmd);
  gen_cmd->add_option("--out", gen_out, "Output JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_pa, algo, run_iters, preset, raw_params, run_out, cadence, run_dump);
    if (*cmp_cmd) return cmd_compare(cmp_pa, cmp_iters, cmp_out, reference_iters, parallel);
    if (*norm_cmd) {
      const SplitProblem problem = norm_pa.load();
      std::printf("%.12g\n", operator_norm(problem));
      return 0;
    }
    if (*gen_cmd) {
      save_problem(gen_out, gen_pa.load());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
