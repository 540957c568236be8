#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include "grpadmm/core.hpp"
#include "grpadmm/problem.hpp"

namespace grpadmm {

enum class Algorithm { grp_fixed, alg1, alg2, padmm };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::grp_fixed: return "grp-fixed";
    case Algorithm::alg1: return "alg1";
    case Algorithm::alg2: return "alg2";
    case Algorithm::padmm: return "padmm";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "grp-fixed" || s == "grpadmm") return Algorithm::grp_fixed;
  if (s == "alg1") return Algorithm::alg1;
  if (s == "alg2") return Algorithm::alg2;
  if (s == "padmm") return Algorithm::padmm;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected grp-fixed, alg1, alg2, padmm)");
}

// ---------------------------------------------------------------------------
// Step-size rules

/// Constant (tau, sigma); psi is the golden-ratio extrapolation weight
/// (unused by PADMM).
struct FixedStep {
  double tau;
  double sigma;
  double psi;

  static FixedStep make(double tau, double sigma, double psi = kGoldenRatio) {
    if (!(tau > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("fixed step: tau and sigma must be positive");
    if (!(psi > 1.0) || psi > kGoldenRatio) throw std::invalid_argument("fixed step: psi must lie in (1, phi]");
    return {tau, sigma, psi};
  }
};

/// Nonincreasing primal steps driven by the local estimate ||A dx|| / ||dx||.
struct DecreasingStep {
  double tau0;
  double beta;
  double psi;
  double mu;
  double lambda_min_s = 1.0;

  static DecreasingStep make(double tau0, double beta, double psi, double mu, double lambda_min_s = 1.0) {
    if (!(tau0 > 0.0)) throw std::invalid_argument("alg1: tau0 must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("alg1: beta must be positive");
    if (!(psi > 1.0) || psi > kGoldenRatio) throw std::invalid_argument("alg1: psi must lie in (1, phi]");
    if (!(mu > 0.0) || !(mu < psi / 2.0)) throw std::invalid_argument("alg1: mu must lie in (0, psi/2)");
    if (!(lambda_min_s > 0.0)) throw std::invalid_argument("alg1: lambda_min(S) must be positive");
    return {tau0, beta, psi, mu, lambda_min_s};
  }
};

/// xi_j = 1 / (j+1)^1.01, so that xi_0 is defined.
inline double default_xi(long j) { return 1.0 / std::pow(static_cast<double>(j + 1), 1.01); }

/// Eventually increasing primal steps: shrink when tau_{k-1} L_k exceeds
/// r*lambda/sqrt(beta), otherwise grow by (rho + xi_{k-1}).
struct IncreasingStep {
  double tau0;
  double beta;
  double psi;
  double rho;
  double r;
  double r1;
  double lambda_bar = 1.0;
  std::function<double(long)> xi = default_xi;
  double tau_max = kInf;

  static double max_rho(double psi) { return 1.0 / psi + 1.0 / (psi * psi); }

  static IncreasingStep make(double tau0, double beta, double psi, double rho, double r, double r1,
                             double lambda_bar = 1.0, std::function<double(long)> xi = default_xi,
                             double tau_max = kInf) {
    if (!(tau0 > 0.0)) throw std::invalid_argument("alg2: tau0 must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("alg2: beta must be positive");
    if (!(psi > 1.0) || !(psi < kGoldenRatio)) throw std::invalid_argument("alg2: psi must lie in (1, phi)");
    if (!(rho > 1.0) || rho > max_rho(psi)) {
      throw std::invalid_argument("alg2: rho must lie in (1, 1/psi + 1/psi^2]");
    }
    if (!(r1 > 0.0) || !(r1 < r) || !(r < rho / 2.0)) {
      throw std::invalid_argument("alg2: need 0 < r1 < r < rho/2");
    }
    if (!(lambda_bar > 0.0)) throw std::invalid_argument("alg2: lambda_bar must be positive");
    if (!xi) throw std::invalid_argument("alg2: xi schedule must be set");
    if (!(tau_max > 0.0)) throw std::invalid_argument("alg2: tau_max must be positive");
    return {tau0, beta, psi, rho, r, r1, lambda_bar, std::move(xi), tau_max};
  }
};

using StepRule = std::variant<FixedStep, DecreasingStep, IncreasingStep>;

inline double rule_psi(const StepRule& rule) {
  return std::visit([](const auto& r) { return r.psi; }, rule);
}

inline double initial_tau(const StepRule& rule) {
  return std::visit(
      [](const auto& r) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, FixedStep>) return r.tau;
        else return r.tau0;
      },
      rule);
}

inline void check_rule_matches(Algorithm algorithm, const StepRule& rule) {
  const bool ok = (algorithm == Algorithm::alg1 && std::holds_alternative<DecreasingStep>(rule)) ||
                  (algorithm == Algorithm::alg2 && std::holds_alternative<IncreasingStep>(rule)) ||
                  ((algorithm == Algorithm::grp_fixed || algorithm == Algorithm::padmm) &&
                   std::holds_alternative<FixedStep>(rule));
  if (!ok) throw std::invalid_argument("step rule does not match algorithm " + to_string(algorithm));
}

// ---------------------------------------------------------------------------
// Sub-operations

/// ((psi-1)/psi) x_prev + (1/psi) u_prev.
inline Vector golden_combine(const Vector& x_prev, const Vector& u_prev, double psi) {
  if (!(psi > 1.0)) throw std::invalid_argument("golden_combine: psi must exceed 1");
  require_size(u_prev.size(), x_prev.size(), "golden_combine");
  return ((psi - 1.0) / psi) * x_prev + (1.0 / psi) * u_prev;
}

/// With S = I the x-subproblem is a single proximal step on g.
inline Vector x_update(const SplitProblem& problem, const Vector& u, const Vector& y, double tau,
                       ProxWorkspace* ws = nullptr) {
  return problem.g.prox(u - tau * problem.A.adjoint(y), tau, ws);
}

/// min{tau_prev, (mu sqrt(lambda_min_S)/sqrt(beta)) ||dx|| / ||A dx||};
/// keeps tau_prev when either norm vanishes.
inline double tau_update_alg1(double tau_prev, double dx_norm, double adx_norm, double mu, double beta,
                              double lambda_min_s) {
  if (adx_norm == 0.0 || dx_norm == 0.0) return tau_prev;
  const double candidate = (mu * std::sqrt(lambda_min_s) / std::sqrt(beta)) * (dx_norm / adx_norm);
  return std::min(tau_prev, candidate);
}

inline double tau_update_alg1(double tau_prev, const Vector& dx, const Vector& adx, const DecreasingStep& rule) {
  return tau_update_alg1(tau_prev, dx.norm(), adx.norm(), rule.mu, rule.beta, rule.lambda_min_s);
}

enum class StepBranch { none, shrink, grow };

struct Alg2Update {
  double tau;
  StepBranch branch;
  bool capped = false;  // tau_max bound the grow branch
};

/// k is the index of the iterate being produced (k >= 1); xi is read at k-1.
inline Alg2Update tau_update_alg2(double tau_prev, std::optional<double> curvature, long k,
                                  const IncreasingStep& rule) {
  const double sqrt_beta = std::sqrt(rule.beta);
  if (curvature && tau_prev * *curvature > rule.r * rule.lambda_bar / sqrt_beta) {
    return {rule.r1 * rule.lambda_bar / (sqrt_beta * *curvature), StepBranch::shrink, false};
  }
  const double grown = (rule.rho + rule.xi(k - 1)) * tau_prev;
  if (grown > rule.tau_max) return {rule.tau_max, StepBranch::grow, true};
  return {grown, StepBranch::grow, false};
}

/// Closed-form minimizer of f(w) + <y, s w> + sigma/2 ||a_x + s w - b||^2
/// + prox_weight/2 ||w - w_prev||^2 for B = s I, where a_x = A x_k.
inline Vector w_update_from_ax(const SplitProblem& problem, const Vector& ax, const Vector& w_prev,
                               const Vector& y_prev, double sigma, double prox_weight) {
  const auto scale = problem.B.identity_scale();
  if (!scale) {
    throw std::invalid_argument("w_update: B of kind " + to_string(problem.B.kind()) +
                                " has no closed-form w-step; supply a custom w-solver");
  }
  const double s = *scale;
  const double denom = sigma * s * s + prox_weight;
  Vector center = (sigma * s) * (problem.b - ax) - s * y_prev;
  if (prox_weight != 0.0) center += prox_weight * w_prev;
  center /= denom;
  return problem.f.prox(center, 1.0 / denom);
}

inline Vector w_update(const SplitProblem& problem, const Vector& x, const Vector& w_prev, const Vector& y_prev,
                       double sigma, double prox_weight) {
  return w_update_from_ax(problem, problem.A.apply(x), w_prev, y_prev, sigma, prox_weight);
}

/// y_prev + sigma * residual.
inline Vector y_update(const Vector& y_prev, double sigma, const Vector& residual) {
  if (!(sigma > 0.0)) throw std::invalid_argument("y_update: sigma must be positive");
  require_size(residual.size(), y_prev.size(), "y_update");
  return y_prev + sigma * residual;
}

// ---------------------------------------------------------------------------
// Iteration state

struct SolverState {
  Vector x, w, y, u;
  Vector x_prev;
  Vector ax;        // A x (cached)
  Vector residual;  // A x + B w - b at the current iterate
  double tau_prev = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  long k = 0;
  long shrink_events = 0;
  StepBranch last_branch = StepBranch::none;
  bool tau_capped = false;
  std::optional<double> last_curvature;
};

struct SolverOptions {
  double t_weight = 0.0;  // T = t I
  std::optional<Vector> x0, w0, y0;
};

/// A run produced a NaN or infinite iterate.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(long k, double tau)
      : std::runtime_error(make_message(k, tau)), k_(k), tau_(tau) {}
  long iteration() const { return k_; }
  double tau() const { return tau_; }

 private:
  static std::string make_message(long k, double tau) {
    std::ostringstream os;
    os << "non-finite iterate at k=" << k << " (tau_k=" << tau << ")";
    return os.str();
  }
  long k_;
  double tau_;
};

/// Drives one of the four schemes over a fixed problem. Owns its state and
/// prox scratch; the problem and rule are shared read-only.
class Solver {
 public:
  Solver(const SplitProblem& problem, Algorithm algorithm, StepRule rule, SolverOptions options = {})
      : problem_(problem), algorithm_(algorithm), rule_(std::move(rule)), options_(std::move(options)) {
    problem_.validate();
    check_rule_matches(algorithm_, rule_);
    if (!(options_.t_weight >= 0.0)) throw std::invalid_argument("T weight must be nonnegative");
    reset();
  }

  void reset() {
    auto& s = state_;
    s = SolverState{};
    s.x = options_.x0.value_or(Vector::Zero(problem_.q()));
    s.w = options_.w0.value_or(Vector::Zero(problem_.p()));
    s.y = options_.y0.value_or(Vector::Zero(problem_.m()));
    require_size(s.x.size(), problem_.q(), "x0");
    require_size(s.w.size(), problem_.p(), "w0");
    require_size(s.y.size(), problem_.m(), "y0");
    s.u = s.x;
    s.x_prev = s.x;
    s.ax = problem_.A.apply(s.x);
    s.residual = s.ax + problem_.B.apply(s.w) - problem_.b;
    s.tau = initial_tau(rule_);
    s.tau_prev = s.tau;
    if (const auto* f = std::get_if<FixedStep>(&rule_)) s.sigma = f->sigma;
    else if (const auto* r1 = std::get_if<DecreasingStep>(&rule_)) s.sigma = r1->beta * s.tau;
    else s.sigma = std::get<IncreasingStep>(rule_).beta * s.tau;
    workspace_ = ProxWorkspace{};
  }

  /// One full iteration (x, tau, w, y).
  void step() {
    if (algorithm_ == Algorithm::padmm) step_padmm();
    else step_golden();
    auto& s = state_;
    if (!all_finite(s.x) || !all_finite(s.w) || !all_finite(s.y) || !std::isfinite(s.tau)) {
      throw NonFiniteError(s.k, s.tau);
    }
  }

  const SolverState& state() const { return state_; }
  const SplitProblem& problem() const { return problem_; }
  const StepRule& rule() const { return rule_; }
  Algorithm algorithm() const { return algorithm_; }
  const ProxWorkspace& workspace() const { return workspace_; }

 private:
  void step_golden() {
    auto& s = state_;
    const long k = s.k + 1;
    const double psi = rule_psi(rule_);

    s.u = golden_combine(s.x, s.u, psi);
    Vector x_new = x_update(problem_, s.u, s.y, s.tau, &workspace_);
    Vector ax_new = problem_.A.apply(x_new);

    double tau_new = s.tau;
    double prox_weight = options_.t_weight;
    s.last_branch = StepBranch::none;
    s.tau_capped = false;
    if (const auto* r1 = std::get_if<DecreasingStep>(&rule_)) {
      tau_new = tau_update_alg1(s.tau, x_new - s.x, ax_new - s.ax, *r1);
      s.sigma = r1->beta * tau_new;
    } else if (const auto* r2 = std::get_if<IncreasingStep>(&rule_)) {
      s.last_curvature = local_curvature_from_diffs(x_new - s.x, ax_new - s.ax);
      const Alg2Update upd = tau_update_alg2(s.tau, s.last_curvature, k, *r2);
      tau_new = upd.tau;
      s.last_branch = upd.branch;
      s.tau_capped = upd.capped;
      if (upd.branch == StepBranch::shrink) ++s.shrink_events;
      s.sigma = r2->beta * tau_new;
      prox_weight = options_.t_weight / s.sigma;
    }

    s.x_prev = std::move(s.x);
    s.x = std::move(x_new);
    s.ax = std::move(ax_new);
    s.tau_prev = s.tau;
    s.tau = tau_new;
    finish_dual(prox_weight);
    s.k = k;
  }

  // Linearized x-step: prox of g at x_k - tau A^T (y_k + sigma r_k).
  void step_padmm() {
    auto& s = state_;
    const Vector v = s.x - s.tau * problem_.A.adjoint(s.y + s.sigma * s.residual);
    Vector x_new = problem_.g.prox(v, s.tau, &workspace_);
    s.x_prev = std::move(s.x);
    s.x = std::move(x_new);
    s.ax = problem_.A.apply(s.x);
    s.u = s.x;
    s.tau_prev = s.tau;
    s.last_branch = StepBranch::none;
    finish_dual(options_.t_weight);
    s.k += 1;
  }

  void finish_dual(double prox_weight) {
    auto& s = state_;
    s.w = w_update_from_ax(problem_, s.ax, s.w, s.y, s.sigma, prox_weight);
    s.residual = s.ax + problem_.B.apply(s.w) - problem_.b;
    s.y = y_update(s.y, s.sigma, s.residual);
  }

  const SplitProblem& problem_;
  Algorithm algorithm_;
  StepRule rule_;
  SolverOptions options_;
  SolverState state_;
  ProxWorkspace workspace_;
};

}  // namespace grpadmm
