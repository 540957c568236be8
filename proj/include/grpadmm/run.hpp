#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grpadmm/problem.hpp"
#include "grpadmm/solver.hpp"

namespace grpadmm {

struct MetricsRow {
  long k = 0;
  double tau = 0.0;
  double sigma = 0.0;
  double objective = 0.0;
  std::optional<double> rel_gap;
  double fes_gap = 0.0;
  double ergodic_objective = 0.0;
  std::optional<double> psnr;
  double time_ms = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

enum class RunStatus { completed, aborted_nonfinite };

inline std::string to_string(RunStatus s) {
  return s == RunStatus::completed ? "completed" : "aborted-nonfinite";
}

struct RunTrace {
  std::string name;
  Algorithm algorithm = Algorithm::grp_fixed;
  std::vector<MetricsRow> rows;
  RunStatus status = RunStatus::completed;
  std::string message;

  // Full per-iteration step-size history (index k-1 holds tau_k), independent
  // of the metric cadence.
  std::vector<double> taus;
  std::vector<StepBranch> branches;
  std::vector<double> xi_used;  // xi_{k-1} on grow steps, NaN otherwise
  long shrink_events = 0;
  bool tau_cap_bound = false;

  /// Lowest objective seen at any iterate k >= 1.
  double best_objective = kInf;

  Vector x, w, y;              // final iterate
  Vector x_ergodic, w_ergodic;  // running means of x_1..x_N, w_1..w_N
};

/// Called after every iteration with the fresh state; row is set on
/// iterations where metrics were recorded.
using IterationCallback = std::function<void(const SolverState&, const MetricsRow*)>;

struct RunOptions {
  long iters = 1;
  long cadence = 1;  // record a metrics row every `cadence` iterations (and the last)
  SolverOptions solver;
  IterationCallback callback;
};

/// Metric cadence: every iteration up to 1e5 variables, every 10 beyond.
inline long default_cadence(const SplitProblem& p) { return p.q() + p.p() <= 100000 ? 1 : 10; }

inline RunTrace run(const SplitProblem& problem, Algorithm algorithm, const StepRule& rule,
                    const RunOptions& options) {
  if (options.iters < 1) throw std::invalid_argument("run: iters must be >= 1");
  if (options.cadence < 1) throw std::invalid_argument("run: cadence must be >= 1");

  Solver solver(problem, algorithm, rule, options.solver);
  RunTrace trace;
  trace.name = to_string(algorithm);
  trace.algorithm = algorithm;
  trace.taus.reserve(static_cast<std::size_t>(options.iters));
  trace.branches.reserve(static_cast<std::size_t>(options.iters));
  trace.rows.reserve(static_cast<std::size_t>(options.iters / options.cadence + 1));

  Vector x_avg = Vector::Zero(problem.q());
  Vector w_avg = Vector::Zero(problem.p());
  const auto* increasing = std::get_if<IncreasingStep>(&rule);
  const auto start = std::chrono::steady_clock::now();

  for (long k = 1; k <= options.iters; ++k) {
    try {
      solver.step();
    } catch (const NonFiniteError& e) {
      trace.status = RunStatus::aborted_nonfinite;
      trace.message = e.what();
      break;
    }
    const SolverState& s = solver.state();
    x_avg += (s.x - x_avg) / static_cast<double>(k);
    w_avg += (s.w - w_avg) / static_cast<double>(k);

    trace.taus.push_back(s.tau);
    trace.branches.push_back(s.last_branch);
    trace.xi_used.push_back(increasing && s.last_branch == StepBranch::grow ? increasing->xi(k - 1)
                                                                            : std::nan(""));
    trace.tau_cap_bound = trace.tau_cap_bound || s.tau_capped;

    const double phi = objective(problem, s.x, s.w);
    trace.best_objective = std::min(trace.best_objective, phi);

    const bool record = (k % options.cadence == 0) || k == options.iters;
    if (record) {
      MetricsRow row;
      row.k = k;
      row.tau = s.tau;
      row.sigma = s.sigma;
      row.objective = phi;
      row.fes_gap = s.residual.norm();
      row.ergodic_objective = objective(problem, x_avg, w_avg);
      if (problem.image && problem.x_true) {
        row.psnr = psnr(Image2D(*problem.image, s.x), Image2D(*problem.image, *problem.x_true));
      }
      row.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      trace.rows.push_back(row);
      if (options.callback) options.callback(s, &trace.rows.back());
    } else if (options.callback) {
      options.callback(s, nullptr);
    }
  }

  const SolverState& s = solver.state();
  trace.shrink_events = s.shrink_events;
  trace.x = s.x;
  trace.w = s.w;
  trace.y = s.y;
  trace.x_ergodic = std::move(x_avg);
  trace.w_ergodic = std::move(w_avg);
  return trace;
}

}  // namespace grpadmm
