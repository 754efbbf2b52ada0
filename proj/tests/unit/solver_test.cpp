#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "ksgl/evaluate.hpp"
#include "ksgl/solver.hpp"

using namespace ksgl;
using ksgl::testing::max_abs_diff;

namespace {

Vector stack(const Matrix& a, const Matrix& b) {
  Vector v(a.size() + b.size());
  v << Eigen::Map<const Vector>(a.data(), a.size()), Eigen::Map<const Vector>(b.data(), b.size());
  return v;
}

Matrix omega(const KsModel& m) { return kron_sum_dense(m.theta(), m.psi()); }

SolverConfig config(double gamma, int k) {
  SolverConfig cfg;
  cfg.gamma_theta = cfg.gamma_psi = gamma;
  cfg.k_trunc = k;
  return cfg;
}

bool contains(const std::vector<Coordinate>& v, int i, int j) {
  for (const Coordinate& c : v)
    if (c.i == i && c.j == j) return true;
  return false;
}

}  // namespace

TEST(ActiveSets, IdentityWithSmallGradientHasOnlyDiagonals) {
  const KsModel m = KsModel::identity(4, 3);
  Gradient g{Matrix::Constant(4, 4, 0.01), Matrix::Constant(3, 3, 0.01)};
  const ActiveSets a = detect_active_sets(m, g, config(0.1, 1));
  EXPECT_EQ(a.theta.size(), 4u);
  EXPECT_EQ(a.psi.size(), 3u);
  for (const Coordinate& c : a.theta) EXPECT_EQ(c.i, c.j);
}

TEST(ActiveSets, NonzeroEntryIsAlwaysActive) {
  Matrix theta = Matrix::Identity(3, 3);
  theta(0, 1) = theta(1, 0) = 0.2;
  const KsModel m(theta, Matrix::Identity(2, 2));
  Gradient g{Matrix::Zero(3, 3), Matrix::Zero(2, 2)};
  const ActiveSets a = detect_active_sets(m, g, config(0.1, 1));
  EXPECT_TRUE(contains(a.theta, 0, 1));
  EXPECT_FALSE(contains(a.theta, 0, 2));
}

TEST(ActiveSets, MatchesBruteForcePredicate) {
  Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix theta = ksgl::testing::random_spd(5, rng);
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < j; ++i)
        if (std::abs(theta(i, j)) < 0.3) theta(i, j) = theta(j, i) = 0.0;
    theta += 5 * Matrix::Identity(5, 5);
    const KsModel m(theta, ksgl::testing::random_spd(4, rng));
    const Gradient g = gradient(ksgl::testing::random_stats(5, 4, 2, rng), m);
    const SolverConfig cfg = config(0.2, 1);
    const ActiveSets a = detect_active_sets(m, g, cfg);
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i <= j; ++i) {
        const bool expect = i == j || theta(i, j) != 0.0 || std::abs(g.theta(i, j)) > 4 * cfg.gamma_theta;
        EXPECT_EQ(contains(a.theta, i, j), expect) << i << "," << j;
      }
    }
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i <= j; ++i) {
        const bool expect = i == j || m.psi()(i, j) != 0.0 || std::abs(g.psi(i, j)) > 5 * cfg.gamma_psi;
        EXPECT_EQ(contains(a.psi, i, j), expect);
      }
    }
  }
}

TEST(Screening, IdentityGivesSingletons) {
  SampleStats st{Matrix::Identity(4, 4), Matrix::Identity(3, 3), 1};
  const Screening s = screen_blocks(st, config(0.1, 1));
  EXPECT_EQ(s.theta_blocks, 4);
  EXPECT_EQ(s.psi_blocks, 3);
}

TEST(Screening, TwoBlocks) {
  Matrix s = Matrix::Zero(4, 4);
  s.topLeftCorner(2, 2).setConstant(1.0);
  s.bottomRightCorner(2, 2).setConstant(1.0);
  SampleStats st{s, Matrix::Identity(2, 2), 1};
  const Screening sc = screen_blocks(st, config(0.5, 1));
  EXPECT_EQ(sc.theta_blocks, 2);
  EXPECT_EQ(sc.theta_component, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_TRUE(sc.theta_fixed(1, 2));
  EXPECT_FALSE(sc.theta_fixed(0, 1));
}

TEST(Screening, FixedEntriesLeaveActiveSet) {
  Matrix s = Matrix::Identity(4, 4) * 0.5;
  s(0, 1) = s(1, 0) = 0.9;
  s(2, 3) = s(3, 2) = 0.9;
  SampleStats st{s, Matrix::Identity(2, 2) * 0.5, 1};
  const SolverConfig cfg = config(0.3, 1);
  const Screening sc = screen_blocks(st, cfg);
  const KsModel m = KsModel::identity(4, 2);
  Gradient g{Matrix::Constant(4, 4, 10.0), Matrix::Zero(2, 2)};
  const ActiveSets a = detect_active_sets(m, g, cfg, &sc);
  EXPECT_TRUE(contains(a.theta, 0, 1));
  EXPECT_TRUE(contains(a.theta, 2, 3));
  EXPECT_FALSE(contains(a.theta, 0, 2));
  EXPECT_FALSE(contains(a.theta, 1, 3));
}

TEST(CoordinateDescent, FirstUpdateFromIdentityClosedForm) {
  // q=4, K=q so every V factor is I/2 with unit weight: a = 4 * 0.25 = 1,
  // b = q * S_01 = 1.2, mu = S(-1.2, 0.4) = -0.8.
  Matrix s = Matrix::Identity(4, 4) * 0.5;
  s(0, 1) = s(1, 0) = 0.3;
  SampleStats st{s, Matrix::Identity(4, 4) * 0.5, 1};
  const KsModel m = KsModel::identity(4, 4);
  const Gradient g = gradient(st, m);
  EXPECT_NEAR(g.theta(0, 1), 1.2, 1e-14);
  ActiveSets a;
  a.theta = {{0, 1}};
  Rng rng(1);
  for (int k : {0, 4}) {
    const DirectionPair d = cd_direction(m, g, build_hessian(m, k), a, {0.1, 0.1}, 1, rng);
    EXPECT_NEAR(d.theta(0, 1), -0.8, 1e-14);
    EXPECT_NEAR(d.theta(1, 0), -0.8, 1e-14);
    EXPECT_EQ(d.psi.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(CoordinateDescent, BelowThresholdEntryStaysZero) {
  Matrix s = Matrix::Identity(4, 4) * 0.5;
  s(0, 1) = s(1, 0) = 0.05;
  SampleStats st{s, Matrix::Identity(3, 3) * 0.5, 1};
  const KsModel m = KsModel::identity(4, 3);
  ActiveSets a;
  a.theta = {{0, 1}};
  Rng rng(2);
  const DirectionPair d = cd_direction(m, gradient(st, m), build_hessian(m, 1), a, {0.1, 0.1}, 3, rng);
  EXPECT_EQ(d.theta(0, 1), 0.0);
}

TEST(CoordinateDescent, ModelValueNonincreasingInSweeps) {
  Rng gen(42);
  const KsModel m = ksgl::testing::random_model(4, 5, gen);
  const SampleStats st = ksgl::testing::random_stats(4, 5, 2, gen);
  const Gradient g = gradient(st, m);
  const SolverConfig cfg = config(0.05, 0);
  const ActiveSets a = detect_active_sets(m, g, cfg);
  for (int k : {0, 1, 3}) {
    const HessianRep h = build_hessian(m, k);
    double prev = 0.0;  // value at D = 0
    for (int sweeps = 1; sweeps <= 8; ++sweeps) {
      Rng rng(7);  // same seed: each run extends the previous visit sequence
      const DirectionPair d = cd_direction(m, g, h, a, cfg.penalty(), sweeps, rng);
      const double v = quadratic_model(m, g, h, d, cfg.penalty());
      EXPECT_LE(v, prev + 1e-12) << "k=" << k << " sweeps=" << sweeps;
      prev = v;
    }
  }
}

TEST(CoordinateDescent, QuadraticModelMatchesDenseHessian) {
  Rng rng(43);
  const KsModel m = ksgl::testing::random_model(3, 4, rng);
  const SampleStats st = ksgl::testing::random_stats(3, 4, 2, rng);
  const Gradient g = gradient(st, m);
  const DirectionPair d{ksgl::testing::random_symmetric(3, rng), ksgl::testing::random_symmetric(4, rng)};
  const Penalty pen{0.2, 0.3};
  const Vector x = stack(d.theta, d.psi);
  const double lin = stack(g.theta, g.psi).dot(x);
  const double dh = 4 * 0.2 * (offdiag_l1(m.theta() + d.theta) - offdiag_l1(m.theta())) +
                    3 * 0.3 * (offdiag_l1(m.psi() + d.psi) - offdiag_l1(m.psi()));

  const Matrix h_exact = hessian_oracle_full(m.theta(), m.psi());
  EXPECT_NEAR(quadratic_model(m, g, build_hessian(m, 0), d, pen), lin + 0.5 * x.dot(h_exact * x) + dh, 1e-9);
  const ApproxHessianRep ap = build_approx(m, 2);
  const Matrix h_approx = assemble_dense(ap);
  EXPECT_NEAR(quadratic_model(m, g, ap, d, pen), lin + 0.5 * x.dot(h_approx * x) + dh, 1e-9);
  EXPECT_NEAR(predicted_decrease(m, g, d, pen), lin + dh, 1e-12);
}

TEST(CoordinateDescent, UnpenalizedExactSolvesNewtonSystem) {
  // With no penalty and every coordinate active, CD minimizes the quadratic
  // model; its minimizer satisfies H vec(D) = -vec(G). H is singular along
  // the gauge direction, so compare residuals and the projected solution.
  Rng rng(44);
  const KsModel m = ksgl::testing::random_model(3, 3, rng);
  const SampleStats st = ksgl::testing::random_stats(3, 3, 3, rng);
  const Gradient g = gradient(st, m);
  ActiveSets a;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i <= j; ++i) {
      a.theta.push_back({i, j});
      a.psi.push_back({i, j});
    }
  Rng cd_rng(5);
  const DirectionPair d = cd_direction(m, g, build_hessian(m, 0), a, {0.0, 0.0}, 3000, cd_rng);

  const Matrix h = hessian_oracle_full(m.theta(), m.psi());
  const Vector gv = stack(g.theta, g.psi);
  const Vector x = stack(d.theta, d.psi);
  EXPECT_LT((h * x + gv).norm(), 1e-7 * gv.norm());

  // Least-norm dense solve, then compare the parts orthogonal to the null direction.
  const Vector ref = h.completeOrthogonalDecomposition().solve(-gv);
  Vector null = stack(Matrix::Identity(3, 3), -Matrix::Identity(3, 3)).normalized();
  const Vector diff = x - ref;
  EXPECT_LT((diff - null.dot(diff) * null).norm(), 1e-6 * ref.norm());
}

TEST(LineSearch, DiagonalDirectionDeltaIsLinear) {
  Rng rng(45);
  const KsModel m = ksgl::testing::random_model(3, 4, rng);
  const SampleStats st = ksgl::testing::random_stats(3, 4, 2, rng);
  const Gradient g = gradient(st, m);
  const DirectionPair d{Vector::Constant(3, -0.1).asDiagonal(), Vector::Constant(4, 0.05).asDiagonal()};
  const double expect = (d.theta * g.theta).trace() + (d.psi * g.psi).trace();
  EXPECT_NEAR(predicted_decrease(m, g, d, {0.3, 0.3}), expect, 1e-13);
}

TEST(LineSearch, IndefiniteFullStepIsShortened) {
  SampleStats st{Matrix::Identity(2, 2) * 3.0, Matrix::Identity(2, 2) * 3.0, 1};
  const KsModel m = KsModel::identity(2, 2);
  const SolverConfig cfg = config(0.1, 1);
  const Gradient g = gradient(st, m);
  const ObjectiveValue cur = objective(st, m, cfg.penalty());
  const DirectionPair d{-3.0 * Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
  const LineSearchResult r = line_search(m, st, d, g, cur, cfg);
  EXPECT_LT(r.alpha, 1.0);
  EXPECT_GT(r.eig_theta.min() + r.eig_psi.min(), 0.0);
  EXPECT_LT(r.objective.f, cur.f);
  const KsModel next(m.theta() + r.alpha * d.theta, m.psi());
  EXPECT_NEAR(objective(st, next, cfg.penalty()).f, r.objective.f, 1e-12);
}

TEST(LineSearch, FailsWhenBacktracksExhausted) {
  SampleStats st{Matrix::Identity(2, 2) * 3.0, Matrix::Identity(2, 2) * 3.0, 1};
  const KsModel m = KsModel::identity(2, 2);
  SolverConfig cfg = config(0.1, 1);
  cfg.max_backtracks = 0;
  const DirectionPair d{-3.0 * Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
  EXPECT_THROW(line_search(m, st, d, gradient(st, m), objective(st, m, cfg.penalty()), cfg), LineSearchError);
}

TEST(LineSearch, FullStepNearOptimum) {
  const auto inst = ksgl::testing::simulated_instance(6, 5, 3, 11);
  SolverConfig cfg = config(0.3 * 0.5, 0);
  cfg.epsilon = 1e-7;
  cfg.sweep_schedule = constant_sweep_schedule(50);
  const FitResult r = fit(inst.stats, cfg);
  ASSERT_EQ(r.reason, StopReason::converged);
  // Step once more from a slightly perturbed optimum.
  const KsModel start(r.model.theta() + 1e-4 * Matrix::Identity(6, 6), r.model.psi());
  Rng rng(3);
  const NewtonStep s = newton_step(inst.stats, start, objective(inst.stats, start, cfg.penalty()), cfg, 0, rng);
  ASSERT_FALSE(s.zero_step);
  EXPECT_EQ(s.alpha, 1.0);
  EXPECT_EQ(s.backtracks, 0);
}

TEST(Convergence, Examples) {
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.consecutive_required = 3;
  auto trace_of = [](std::vector<double> f) {
    SolverTrace t;
    for (std::size_t i = 0; i < f.size(); ++i) t.records.push_back({static_cast<int>(i), f[i]});
    return t;
  };
  EXPECT_FALSE(check_convergence(trace_of({10, 5, 5.000001, 5.000001}), cfg));
  EXPECT_TRUE(check_convergence(trace_of({10, 5, 5.000001, 5.000001, 5.000001}), cfg));
  EXPECT_FALSE(check_convergence(trace_of({64, 32, 16, 8, 4, 2, 1}), cfg));
  EXPECT_FALSE(check_convergence(trace_of({10, 5, 5.000001, 4, 4.000001, 4.000001}), cfg));
  EXPECT_FALSE(check_convergence(trace_of({10}), cfg));
}

TEST(Fit, DiagonalSolutionForIdentityCovariance) {
  SampleStats st{Matrix::Identity(4, 4) * 0.5, Matrix::Identity(3, 3) * 0.5, 1};
  SolverConfig cfg = config(1.0, 1);
  cfg.epsilon = 1e-10;
  cfg.max_newton_iters = 200;
  const FitResult r = fit(st, cfg);
  EXPECT_EQ(r.reason, StopReason::converged);
  EXPECT_LT(max_abs_diff(r.model.theta(), Matrix::Identity(4, 4)), 1e-6);
  EXPECT_LT(max_abs_diff(r.model.psi(), Matrix::Identity(3, 3)), 1e-6);
}

TEST(Fit, TraceIsNonincreasingAndGaugeIsFixed) {
  const auto inst = ksgl::testing::simulated_instance(8, 6, 2, 12);
  for (int k : {0, 1, 3}) {
    SolverConfig cfg = config(0.2, k);
    cfg.rho = 1.7;
    const FitResult r = fit(inst.stats, cfg);
    for (std::size_t t = 1; t < r.trace.records.size(); ++t) {
      EXPECT_LE(r.trace.records[t].f, r.trace.records[t - 1].f) << "k=" << k << " t=" << t;
    }
    EXPECT_NEAR(r.model.psi().trace() / r.model.theta().trace(), 1.7, 1e-8);
    EXPECT_NEAR(r.final_objective.f, r.trace.records.back().f, 1e-8 * std::abs(r.final_objective.f));
  }
}

TEST(Fit, ExactAndApproximateReachTheSameOptimum) {
  const auto inst = ksgl::testing::simulated_instance(8, 7, 2, 13);
  SolverConfig cfg = config(0.15, 0);
  cfg.epsilon = 1e-10;
  cfg.max_newton_iters = 500;
  const FitResult exact = fit(inst.stats, cfg);
  cfg.k_trunc = 1;
  const FitResult approx = fit(inst.stats, cfg);
  EXPECT_LT(max_abs_diff(omega(exact.model), omega(approx.model)), 1e-4);
}

TEST(Fit, AdjustOnceMatchesAdjustEveryIteration) {
  const auto inst = ksgl::testing::simulated_instance(7, 6, 2, 14);
  for (double rho : {0.5, 2.0}) {
    SolverConfig cfg = config(0.2, 1);
    cfg.rho = rho;
    cfg.epsilon = 1e-10;
    cfg.max_newton_iters = 500;
    const FitResult once = fit(inst.stats, cfg);
    cfg.adjust_every_iteration = true;
    const FitResult every = fit(inst.stats, cfg);
    EXPECT_LT(max_abs_diff(omega(once.model), omega(every.model)), 1e-6);
  }
}

TEST(Fit, DeterministicForFixedSeed) {
  const auto inst = ksgl::testing::simulated_instance(6, 6, 1, 15);
  SolverConfig cfg = config(0.2, 1);
  cfg.rng_seed = 99;
  const FitResult a = fit(inst.stats, cfg), b = fit(inst.stats, cfg);
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t t = 0; t < a.trace.records.size(); ++t) EXPECT_EQ(a.trace.records[t].f, b.trace.records[t].f);
  EXPECT_EQ(a.model.theta(), b.model.theta());
}

TEST(Fit, RejectsInvalidConfig) {
  SampleStats st{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1};
  SolverConfig cfg = config(0.1, 1);
  cfg.sigma = 0.6;
  EXPECT_THROW(fit(st, cfg), InputError);
  cfg = config(0.1, 3);
  EXPECT_THROW(fit(st, cfg), InputError);
  cfg = config(0.0, 1);
  EXPECT_THROW(fit(st, cfg), InputError);
}

TEST(NewtonStep, InvariantUnderGaugeShift) {
  const auto inst = ksgl::testing::simulated_instance(5, 4, 2, 16);
  Rng gen(17);
  const KsModel m(ksgl::testing::random_spd(5, gen), ksgl::testing::random_spd(4, gen));
  const KsModel s = m.shifted(0.1);
  for (int k : {0, 1}) {
    const SolverConfig cfg = config(0.2, k);
    Rng r1(8), r2(8);
    const NewtonStep a = newton_step(inst.stats, m, objective(inst.stats, m, cfg.penalty()), cfg, 5, r1);
    const NewtonStep b = newton_step(inst.stats, s, objective(inst.stats, s, cfg.penalty()), cfg, 5, r2);
    EXPECT_EQ(a.alpha, b.alpha);
    EXPECT_NEAR(a.delta, b.delta, 1e-9 * std::abs(a.delta));
    EXPECT_LT(max_abs_diff(omega(a.next), omega(b.next)), 1e-10);
  }
}

TEST(Fit, KktConditionsHoldAtConvergence) {
  const auto inst = ksgl::testing::simulated_instance(8, 8, 1, 18);
  SolverConfig cfg = config(0.25, 0);
  cfg.epsilon = 1e-12;
  cfg.max_newton_iters = 300;
  cfg.sweep_schedule = constant_sweep_schedule(100);
  const FitResult r = fit(inst.stats, cfg);
  const Gradient g = gradient(inst.stats, r.model);
  const double wt = 8 * cfg.gamma_theta, wp = 8 * cfg.gamma_psi;
  for (const auto& [x, gr, w] : {std::tuple{&r.model.theta(), &g.theta, wt}, std::tuple{&r.model.psi(), &g.psi, wp}}) {
    for (Eigen::Index j = 0; j < x->cols(); ++j) {
      for (Eigen::Index i = 0; i < x->rows(); ++i) {
        const double v = (*x)(i, j), gij = (*gr)(i, j);
        if (i == j) {
          EXPECT_LT(std::abs(gij), 1e-4 * w);
        } else if (v == 0.0) {
          EXPECT_LE(std::abs(gij), w + 1e-4);
        } else {
          EXPECT_LT(std::abs(gij + w * (v > 0 ? 1.0 : -1.0)), 1e-4 * w);
        }
      }
    }
  }
}

TEST(Fit, ScreeningGivesTheSameEstimate) {
  const auto inst = ksgl::testing::simulated_instance(15, 15, 20, 19, true, 3);
  SolverConfig cfg = config(0.3 * max_offdiag_stat(inst.stats), 1);
  cfg.epsilon = 1e-10;
  cfg.max_newton_iters = 500;
  const Screening sc = screen_blocks(inst.stats, cfg);
  EXPECT_GT(sc.theta_blocks, 1);
  const FitResult plain = fit(inst.stats, cfg);
  cfg.screening = true;
  const FitResult screened = fit(inst.stats, cfg);
  EXPECT_LT(max_abs_diff(omega(plain.model), omega(screened.model)), 1e-6);
  for (int j = 0; j < 15; ++j)
    for (int i = 0; i < j; ++i)
      if (sc.theta_fixed(i, j)) EXPECT_EQ(plain.model.theta()(i, j), 0.0);
}
