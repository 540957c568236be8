#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "grpadmm/problems.hpp"
#include "grpadmm/random.hpp"
#include "grpadmm/solver.hpp"

using namespace grpadmm;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

double soft(double v, double thr) { return std::abs(v) <= thr ? 0.0 : std::copysign(std::abs(v) - thr, v); }

// Exact saddle point of the scalar LASSO  lambda|x| + (w-d)^2/2  s.t.  a x + w = b.
struct ScalarLasso {
  double a, d, b, lambda;
  double x() const { return soft(a * (b - d), lambda) / (a * a); }
  double w() const { return b - a * x(); }
  double y() const { return d - w(); }
  SplitProblem problem() const { return make_lasso(Matrix::Constant(1, 1, a), vec({d}), vec({b}), lambda); }
};

IncreasingStep default_alg2(double tau0 = 1.0) {
  const double psi = 1.6;
  return IncreasingStep::make(tau0, 7.0, psi, IncreasingStep::max_rho(psi), 0.5, 0.45);
}

double subproblem_value(const SplitProblem& p, const Vector& w, const Vector& ax, const Vector& w_prev,
                        const Vector& y, double sigma, double weight) {
  const Vector r = ax + p.B.apply(w) - p.b;
  return p.f.eval(w) + y.dot(p.B.apply(w)) + 0.5 * sigma * r.squaredNorm() +
         0.5 * weight * (w - w_prev).squaredNorm();
}

}  // namespace

TEST(GoldenCombine, Examples) {
  const Vector v = vec({1.5, -2.0, 0.25});
  EXPECT_EQ(golden_combine(v, v, 1.3), v);
  EXPECT_DOUBLE_EQ(golden_combine(vec({1}), vec({0}), 1.6)[0], 0.6 / 1.6);
  EXPECT_NEAR(golden_combine(vec({1}), vec({0}), 1.6)[0], 0.375, 1e-15);
  EXPECT_EQ(golden_combine(vec({2}), vec({0}), 2.0)[0], 1.0);
}

TEST(GoldenCombine, RejectsBadInput) {
  EXPECT_THROW(golden_combine(vec({1}), vec({0}), 1.0), std::invalid_argument);
  EXPECT_THROW(golden_combine(vec({1, 2}), vec({0}), 1.5), DimensionError);
}

TEST(XUpdate, ZeroDualIsPureProx) {
  const auto p = make_lasso(Matrix::Identity(3, 3), Vector::Zero(3), Vector::Zero(3), 0.4);
  const Vector u = vec({1.0, -0.2, 0.5});
  const Vector x = x_update(p, u, Vector::Zero(3), 0.5);
  EXPECT_EQ(x, vec({soft(1.0, 0.2), soft(-0.2, 0.2), soft(0.5, 0.2)}));
}

TEST(XUpdate, ShiftedProjectionForTransport) {
  Rng rng(3);
  const Vector a = vec({0.3, 0.7});
  const Vector b = vec({0.6, 0.4});
  const auto p = make_uot(a, b, 1.0);
  const Vector u = rng.normal_vector(4);
  const Vector y = rng.normal_vector(4);
  const double tau = 0.3;
  const Vector c = uot_cost(2, 2);
  const Vector expected = (u - tau * (c + p.A.adjoint(y))).cwiseMax(0.0);
  EXPECT_LE((x_update(p, u, y, tau) - expected).norm(), 1e-15);
}

TEST(XUpdate, ZeroTermIsGradientStep) {
  SplitProblem p{"toy", ProxTerm::zero(), ProxTerm::zero(), LinearMap::dense((Matrix(2, 2) << 1, 2, 3, 4).finished()),
                 LinearMap::identity(2), Vector::Zero(2)};
  const Vector u = vec({1, 1});
  const Vector y = vec({0.5, -1});
  EXPECT_EQ(x_update(p, u, y, 0.1), u - 0.1 * p.A.adjoint(y));
}

TEST(TauAlg1, Examples) {
  const double oracle = 0.7 / (2.0 * std::sqrt(7.0));
  EXPECT_NEAR(tau_update_alg1(1.0, 1.0, 2.0, 0.7, 7.0, 1.0), oracle, 1e-15);
  EXPECT_NEAR(tau_update_alg1(1.0, 1.0, 2.0, 0.7, 7.0, 1.0), 0.132287, 1e-6);
  EXPECT_EQ(tau_update_alg1(0.8, 1.0, 0.0, 0.7, 7.0, 1.0), 0.8);
  EXPECT_EQ(tau_update_alg1(0.8, 0.0, 0.0, 0.7, 7.0, 1.0), 0.8);
  EXPECT_EQ(tau_update_alg1(0.01, 1.0, 2.0, 0.7, 7.0, 1.0), 0.01);
}

TEST(TauAlg1, VectorOverloadAndNeverIncreases) {
  const auto rule = DecreasingStep::make(1.0, 7.0, 1.6, 0.7);
  EXPECT_NEAR(tau_update_alg1(1.0, vec({0.6, 0.8}), vec({2.0, 0.0}), rule), 0.7 / (2.0 * std::sqrt(7.0)), 1e-15);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double prev = rng.uniform(0.01, 5.0);
    EXPECT_LE(tau_update_alg1(prev, rng.normal_vector(3), rng.normal_vector(3), rule), prev);
  }
}

TEST(TauAlg2, Examples) {
  const double psi = 1.6;
  const double rho = 1.0 / psi + 1.0 / (psi * psi);
  EXPECT_EQ(rho, 1.015625);
  auto rule = IncreasingStep::make(1.0, 1.0, psi, rho, 0.5, 0.45);
  rule.xi = [](long) { return 0.0; };

  const auto shrink = tau_update_alg2(1.0, 0.6, 1, rule);
  EXPECT_EQ(shrink.branch, StepBranch::shrink);
  EXPECT_NEAR(shrink.tau, 0.45 / 0.6, 1e-15);
  EXPECT_NEAR(shrink.tau, 0.75, 1e-15);

  const auto grow = tau_update_alg2(1.0, 0.3, 1, rule);
  EXPECT_EQ(grow.branch, StepBranch::grow);
  EXPECT_EQ(grow.tau, 1.015625);

  const auto undefined = tau_update_alg2(1.0, std::nullopt, 1, rule);
  EXPECT_EQ(undefined.branch, StepBranch::grow);
  EXPECT_EQ(undefined.tau, 1.015625);
}

TEST(TauAlg2, TieTakesGrowBranch) {
  auto rule = IncreasingStep::make(1.0, 1.0, 1.6, 1.015625, 0.5, 0.45);
  const auto upd = tau_update_alg2(1.0, 0.5, 3, rule);
  EXPECT_EQ(upd.branch, StepBranch::grow);
  EXPECT_EQ(upd.tau, (1.015625 + default_xi(2)) * 1.0);
}

TEST(TauAlg2, XiIndexAndCap) {
  auto rule = IncreasingStep::make(2.0, 4.0, 1.6, 1.01, 0.5, 0.45);
  EXPECT_EQ(default_xi(0), 1.0);
  EXPECT_EQ(tau_update_alg2(2.0, std::nullopt, 1, rule).tau, (1.01 + 1.0) * 2.0);
  EXPECT_EQ(tau_update_alg2(2.0, std::nullopt, 5, rule).tau, (1.01 + default_xi(4)) * 2.0);
  rule.tau_max = 2.5;
  const auto capped = tau_update_alg2(2.0, std::nullopt, 1, rule);
  EXPECT_EQ(capped.tau, 2.5);
  EXPECT_TRUE(capped.capped);
}

TEST(StepRules, Validation) {
  EXPECT_THROW(FixedStep::make(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(FixedStep::make(1.0, -1.0), std::invalid_argument);
  EXPECT_NO_THROW(FixedStep::make(1.0, 1.0, kGoldenRatio));

  EXPECT_NO_THROW(DecreasingStep::make(1.0, 7.0, kGoldenRatio, 0.8));
  EXPECT_THROW(DecreasingStep::make(1.0, 7.0, 1.0, 0.4), std::invalid_argument);
  EXPECT_THROW(DecreasingStep::make(1.0, 7.0, 1.7, 0.4), std::invalid_argument);
  EXPECT_THROW(DecreasingStep::make(1.0, 7.0, 1.6, 0.8), std::invalid_argument);
  EXPECT_THROW(DecreasingStep::make(1.0, 7.0, 1.6, 0.0), std::invalid_argument);
  EXPECT_THROW(DecreasingStep::make(0.0, 7.0, 1.6, 0.5), std::invalid_argument);
  EXPECT_THROW(DecreasingStep::make(1.0, 0.0, 1.6, 0.5), std::invalid_argument);
  EXPECT_THROW(DecreasingStep::make(1.0, 1.0, 1.6, 0.5, 0.0), std::invalid_argument);

  const double psi = 1.6;
  const double rho = IncreasingStep::max_rho(psi);
  EXPECT_NO_THROW(IncreasingStep::make(1.0, 7.0, psi, rho, 0.5, 0.45));
  EXPECT_THROW(IncreasingStep::make(1.0, 7.0, kGoldenRatio, 1.0, 0.4, 0.3), std::invalid_argument);
  EXPECT_THROW(IncreasingStep::make(1.0, 7.0, psi, 1.0, 0.4, 0.3), std::invalid_argument);
  EXPECT_THROW(IncreasingStep::make(1.0, 7.0, psi, rho + 1e-9, 0.5, 0.45), std::invalid_argument);
  EXPECT_THROW(IncreasingStep::make(1.0, 7.0, psi, rho, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(IncreasingStep::make(1.0, 7.0, psi, rho, rho / 2.0, 0.45), std::invalid_argument);
  EXPECT_THROW(IncreasingStep::make(1.0, 7.0, psi, rho, 0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(IncreasingStep::make(1.0, 0.0, psi, rho, 0.5, 0.45), std::invalid_argument);
}

TEST(WUpdate, TransportSpecialization) {
  const auto p = make_uot(vec({0.3, 0.7}), vec({0.5, 0.5}), 1.7);
  Rng rng(5);
  const Vector x = rng.normal_vector(4).cwiseAbs();
  const Vector y = rng.normal_vector(4);
  const double sigma = 0.9;
  const double gamma = 1.7;
  const Vector expected = (sigma / (sigma + gamma)) * (p.b - p.A.apply(x) - y / sigma);
  EXPECT_LE((w_update(p, x, Vector::Zero(4), y, sigma, 0.0) - expected).norm(), 1e-15);
}

TEST(WUpdate, ZeroTermIsUnconstrainedMinimizer) {
  Rng rng(6);
  const Matrix a = Matrix::Random(3, 2);
  SplitProblem p{"toy", ProxTerm::zero(), ProxTerm::zero(), LinearMap::dense(a), LinearMap::identity(3),
                 rng.normal_vector(3)};
  const Vector x = rng.normal_vector(2);
  const Vector y = rng.normal_vector(3);
  const Vector w = w_update(p, x, Vector::Zero(3), y, 2.0, 0.0);
  EXPECT_LE((w - (p.b - a * x - y / 2.0)).norm(), 1e-14);
}

TEST(WUpdate, NegatedIdentityGroupShrink) {
  const ImageShape s{4, 3};
  Rng rng(7);
  const auto p = make_rof(Image2D(s, 0.5), rng.normal_vector(s.size()), 0.3);
  const Vector x = rng.normal_vector(s.size());
  const Vector y = rng.normal_vector(2 * s.size());
  const double sigma = 1.7;
  const Vector w = w_update(p, x, Vector::Zero(2 * s.size()), y, sigma, 0.0);
  const Vector expected = ProxTerm::group_l21(0.3).prox(p.A.apply(x) + y / sigma, 1.0 / sigma);
  EXPECT_LE((w - expected).norm(), 1e-14);

  const Vector ax = p.A.apply(x);
  const double best = subproblem_value(p, w, ax, w, y, sigma, 0.0);
  for (int i = 0; i < 100; ++i) {
    const Vector z = w + rng.normal_vector(w.size(), 0.05);
    EXPECT_LE(best, subproblem_value(p, z, ax, w, y, sigma, 0.0) + 1e-12);
  }
}

TEST(WUpdate, ScaledIdentityWithProximalTermBySampling) {
  Rng rng(8);
  const Matrix a = Matrix::Random(4, 3);
  SplitProblem p{"toy", ProxTerm::zero(), ProxTerm::l1(0.4), LinearMap::dense(a), LinearMap::scaled_identity(4, -2.0),
                 rng.normal_vector(4)};
  const Vector x = rng.normal_vector(3);
  const Vector w_prev = rng.normal_vector(4);
  const Vector y = rng.normal_vector(4);
  const double sigma = 0.8;
  const double weight = 0.35;
  const Vector w = w_update(p, x, w_prev, y, sigma, weight);
  const Vector ax = a * x;
  const double best = subproblem_value(p, w, ax, w_prev, y, sigma, weight);
  for (int i = 0; i < 200; ++i) {
    const Vector z = w + rng.normal_vector(4, std::pow(10.0, rng.uniform(-4.0, 0.0)));
    EXPECT_LE(best, subproblem_value(p, z, ax, w_prev, y, sigma, weight) + 1e-12);
  }
}

TEST(WUpdate, RejectsGeneralB) {
  SplitProblem p{"toy", ProxTerm::zero(), ProxTerm::zero(), LinearMap::identity(2),
                 LinearMap::dense(Matrix::Identity(2, 2)), Vector::Zero(2)};
  EXPECT_THROW(w_update(p, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(YUpdate, Examples) {
  const Vector y = vec({1.0, -2.0});
  EXPECT_EQ(y_update(y, 3.0, Vector::Zero(2)), y);
  EXPECT_EQ(y_update(vec({0}), 2.0, vec({3}))[0], 6.0);
  EXPECT_THROW(y_update(y, 0.0, y), std::invalid_argument);
}

TEST(Solver, InitialState) {
  const auto p = gen_lasso(5, 8, 0.1, 1);
  SolverOptions opts;
  opts.x0 = Vector::LinSpaced(8, -1.0, 1.0);
  Solver s(p, Algorithm::alg2, default_alg2(0.5), opts);
  EXPECT_EQ(s.state().u, *opts.x0);
  EXPECT_EQ(s.state().tau, 0.5);
  EXPECT_EQ(s.state().sigma, 3.5);
  EXPECT_EQ(s.state().k, 0);
}

TEST(Solver, RejectsMismatchedRule) {
  const auto p = gen_lasso(3, 4, 0.1, 1);
  EXPECT_THROW(Solver(p, Algorithm::alg1, default_alg2()), std::invalid_argument);
  EXPECT_THROW(Solver(p, Algorithm::padmm, default_alg2()), std::invalid_argument);
  SolverOptions bad;
  bad.t_weight = -1.0;
  EXPECT_THROW(Solver(p, Algorithm::alg2, default_alg2(), bad), std::invalid_argument);
}

TEST(Solver, Alg1StepComposesSubOperations) {
  Matrix a(2, 2);
  a << 1.0, 0.5, -0.3, 2.0;
  const auto p = make_lasso(a, vec({0.2, 0.0}), vec({1.0, -0.7}), 0.1);
  const auto rule = DecreasingStep::make(1.0, 7.0, 1.6, 0.7);
  Solver s(p, Algorithm::alg1, rule);
  s.step();
  s.step();
  const SolverState before = s.state();
  s.step();

  const Vector u = golden_combine(before.x, before.u, 1.6);
  const Vector x = x_update(p, u, before.y, before.tau);
  const double tau = tau_update_alg1(before.tau, x - before.x, a * x - a * before.x, rule);
  const double sigma = 7.0 * tau;
  const Vector w = w_update(p, x, before.w, before.y, sigma, 0.0);
  const Vector y = y_update(before.y, sigma, a * x + w - p.b);

  const auto& after = s.state();
  EXPECT_EQ(after.k, 3);
  EXPECT_EQ(after.u, u);
  EXPECT_LE((after.x - x).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(after.tau, tau);
  EXPECT_DOUBLE_EQ(after.sigma, sigma);
  EXPECT_LE((after.w - w).norm(), 1e-14);
  EXPECT_LE((after.y - y).norm(), 1e-14);
  EXPECT_LE(after.tau, before.tau);
}

TEST(Solver, Alg2StepUsesScaledProximalWeight) {
  const auto p = gen_lasso(4, 6, 0.1, 3);
  const auto rule = default_alg2();
  SolverOptions opts;
  opts.t_weight = 0.5;
  Solver s(p, Algorithm::alg2, rule, opts);
  s.step();
  const SolverState before = s.state();
  s.step();

  const Vector u = golden_combine(before.x, before.u, rule.psi);
  const Vector x = x_update(p, u, before.y, before.tau);
  const auto upd = tau_update_alg2(before.tau, local_curvature(p.A, x, before.x), 2, rule);
  const double sigma = rule.beta * upd.tau;
  const Vector w = w_update(p, x, before.w, before.y, sigma, 0.5 / sigma);
  const Vector y = y_update(before.y, sigma, p.A.apply(x) + w - p.b);

  const auto& after = s.state();
  EXPECT_EQ(after.last_branch, upd.branch);
  EXPECT_DOUBLE_EQ(after.tau, upd.tau);
  EXPECT_LE((after.w - w).norm(), 1e-13);
  EXPECT_LE((after.y - y).norm(), 1e-13);
}

TEST(Solver, PadmmStepIsLinearized) {
  const auto p = gen_lasso(4, 6, 0.1, 4);
  const auto rule = FixedStep::make(0.2, 2.0);
  Solver s(p, Algorithm::padmm, rule);
  s.step();
  const SolverState before = s.state();
  s.step();
  const Vector r = p.A.apply(before.x) + before.w - p.b;
  const Vector x = p.g.prox(before.x - 0.2 * p.A.adjoint(before.y + 2.0 * r), 0.2);
  const Vector w = w_update(p, x, before.w, before.y, 2.0, 0.0);
  const Vector y = y_update(before.y, 2.0, p.A.apply(x) + w - p.b);
  EXPECT_LE((s.state().x - x).norm(), 1e-14);
  EXPECT_LE((s.state().w - w).norm(), 1e-14);
  EXPECT_LE((s.state().y - y).norm(), 1e-14);
  EXPECT_EQ(s.state().tau, 0.2);
}

TEST(Solver, DualConsistency) {
  const auto p = gen_lasso(20, 50, 0.1, 5);
  for (Algorithm alg : {Algorithm::alg1, Algorithm::alg2}) {
    StepRule rule = alg == Algorithm::alg1 ? StepRule(DecreasingStep::make(1.0, 7.0, 1.6, 0.7)) : StepRule(default_alg2());
    Solver s(p, alg, rule);
    for (int k = 0; k < 50; ++k) {
      const Vector y_prev = s.state().y;
      s.step();
      const auto& st = s.state();
      const Vector residual = p.A.apply(st.x) + p.B.apply(st.w) - p.b;
      EXPECT_EQ(st.residual, residual);
      EXPECT_EQ(st.y, y_update(y_prev, st.sigma, residual));
      EXPECT_EQ(st.sigma, 7.0 * st.tau);
    }
  }
}

TEST(Solver, SaddlePointIsFixed) {
  for (const ScalarLasso sl : {ScalarLasso{1.3, 0.4, 2.0, 0.1}, ScalarLasso{-0.7, 0.0, 0.05, 0.5}}) {
    const auto p = sl.problem();
    SolverOptions opts;
    opts.x0 = vec({sl.x()});
    opts.w0 = vec({sl.w()});
    opts.y0 = vec({sl.y()});
    const std::vector<std::pair<Algorithm, StepRule>> cases = {
        {Algorithm::grp_fixed, FixedStep::make(0.5, 1.0)},
        {Algorithm::alg1, DecreasingStep::make(1.0, 7.0, 1.6, 0.7)},
        {Algorithm::alg2, default_alg2()},
        {Algorithm::padmm, FixedStep::make(0.3, 1.0)}};
    for (const auto& [alg, rule] : cases) {
      Solver s(p, alg, rule, opts);
      s.step();
      EXPECT_NEAR(s.state().x[0], sl.x(), 1e-12) << to_string(alg);
      EXPECT_NEAR(s.state().w[0], sl.w(), 1e-12) << to_string(alg);
      EXPECT_NEAR(s.state().y[0], sl.y(), 1e-12) << to_string(alg);
      EXPECT_LE(s.state().residual.norm(), 1e-12);
    }
  }
}

TEST(Solver, GrowOnlyUnrollsToProduct) {
  // With A = 0 the local curvature never exceeds the threshold.
  const auto p = make_lasso(Matrix::Zero(3, 4), Vector::Zero(3), Vector::Zero(3), 0.1);
  const auto rule = default_alg2(0.25);
  Solver s(p, Algorithm::alg2, rule);
  double tau = 0.25;
  long double product = 1.0L;
  for (long k = 1; k <= 40; ++k) {
    s.step();
    tau = (rule.rho + default_xi(k - 1)) * tau;
    product *= static_cast<long double>(rule.rho + default_xi(k - 1));
    EXPECT_EQ(s.state().last_branch, StepBranch::grow);
    EXPECT_EQ(s.state().tau, tau);
    EXPECT_NEAR(s.state().tau, 0.25 * static_cast<double>(product), 1e-12 * s.state().tau);
  }
  EXPECT_EQ(s.state().shrink_events, 0);
}

TEST(Solver, Alg1StepSizesNonincreasingAndBounded) {
  const auto p = gen_lasso(30, 80, 0.1, 6);
  const auto rule = DecreasingStep::make(1.0, 7.0, 1.6, 0.7);
  const double bound = std::min(1.0, 0.7 / (std::sqrt(7.0) * estimate_spectral_norm(p.A)));
  Solver s(p, Algorithm::alg1, rule);
  double prev = rule.tau0;
  for (int k = 0; k < 300; ++k) {
    s.step();
    EXPECT_LE(s.state().tau, prev);
    EXPECT_GE(s.state().tau, bound * (1.0 - 1e-9));
    prev = s.state().tau;
  }
}

TEST(Solver, FixedStepKeepsConstants) {
  const auto p = gen_lasso(6, 9, 0.1, 7);
  Solver s(p, Algorithm::grp_fixed, FixedStep::make(0.3, 2.0, 1.5));
  for (int k = 0; k < 10; ++k) s.step();
  EXPECT_EQ(s.state().tau, 0.3);
  EXPECT_EQ(s.state().sigma, 2.0);
}

TEST(Solver, DivergenceRaisesNonFinite) {
  const auto p = gen_lasso(10, 20, 0.1, 8);
  Solver s(p, Algorithm::padmm, FixedStep::make(1e6, 1e6));
  bool thrown = false;
  try {
    for (int k = 0; k < 5000; ++k) s.step();
  } catch (const NonFiniteError& e) {
    thrown = true;
    EXPECT_GT(e.iteration(), 0);
    EXPECT_EQ(e.tau(), 1e6);
  }
  EXPECT_TRUE(thrown);
}

TEST(Algorithm, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::grp_fixed, Algorithm::alg1, Algorithm::alg2, Algorithm::padmm}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("newton"), std::invalid_argument);
}
