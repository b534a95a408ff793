#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace mlpath;
using namespace mlpath::testing;

namespace {

double max_error_vs(const DiscretizedPath& path, const std::function<double(double)>& exact) {
  double worst = 0.0;
  for (int k = 0; k <= path.segments(); ++k)
    worst = std::max(worst, std::abs(path.node(k)(0) - exact(path.time(k))));
  return worst;
}

double ou_loop(double t) { return std::cosh(t - 1.0) / std::cosh(1.0); }

}  // namespace

TEST(InitPath, ConstantWhenEndpointsCoincide) {
  const auto p = init_path(vec({0.3, -0.2}), vec({0.3, -0.2}), 1.0, 7);
  for (int k = 0; k <= 7; ++k) EXPECT_LT((p.node(k) - vec({0.3, -0.2})).norm(), 1e-15);
}

TEST(InitPath, LinearInterpolation) {
  const auto p = init_path(vec({0.0}), vec({1.0}), 1.0, 4);
  const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int k = 0; k <= 4; ++k) EXPECT_DOUBLE_EQ(p.node(k)(0), expected[k]);
  EXPECT_DOUBLE_EQ(p.dt(), 0.25);
}

TEST(InitPath, ContractViolations) {
  EXPECT_THROW(init_path(vec({0}), vec({1}), 1.0, 1), ArgumentError);
  EXPECT_THROW(init_path(vec({0}), vec({1}), 0.0, 4), ArgumentError);
  EXPECT_THROW(init_path(vec({0}), vec({1, 2}), 1.0, 4), DimensionError);
}

TEST(InitPath, FromFilteredBridgeKeepsEndpoints) {
  const auto sys = constant_drift_1d({0.5, 1.0, std::nullopt});
  EnsembleOptions o;
  o.n_paths = 2000;
  o.dt = 1e-2;
  o.seed = 5;
  const auto ens = simulate_ensemble(sys, vec({0.0}), 0.0, 1.0, o);
  BridgeCriteria c;
  c.xf = vec({-1.0});
  c.T = 1.0;
  c.tol = 0.1;
  const auto kept = ensemble_bridge_filter(ens.trajectories, vec({0.0}), c);
  ASSERT_FALSE(kept.empty());
  const auto path = init_path(vec({0.0}), vec({-1.0}), 1.0, 40, FromTrajectory{kept.front()});
  EXPECT_LE(std::abs(kept.front().states.front()(0) - path.start()(0)), c.tol);
  EXPECT_LE(std::abs(kept.front().states.back()(0) - path.end()(0)), c.tol);
  EXPECT_EQ(path.start()(0), 0.0);
  EXPECT_EQ(path.end()(0), -1.0);
  // Interior nodes are resampled from the source.
  EXPECT_NEAR(path.node(20)(0), kept.front().states[50](0), 1e-12);
}

TEST(InitPath, HorizonMismatchIsResamplingError) {
  Trajectory tr;
  tr.times = {0.0, 0.5, 1.0};
  tr.states = {vec({0}), vec({1}), vec({2})};
  EXPECT_THROW(init_path(vec({0}), vec({2}), 2.0, 4, FromTrajectory{tr}), ResamplingError);
}

TEST(MinimizeAction, ConstantDriftIsLinear) {
  const auto sys = constant_drift_1d({0.5, 1.0, std::nullopt});
  const auto res = minimize_action(sys, vec({0.0}), vec({-1.0}), 1.0, 100);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LT(max_error_vs(res.path, [](double t) { return -t; }), 1e-6);
}

TEST(MinimizeAction, OuLoopMatchesClosedForm) {
  const auto sys = isotropic_ou({1.0, std::sqrt(0.5), 1});
  const auto res = minimize_action(sys, vec({1.0}), vec({1.0}), 2.0, 400);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LT(max_error_vs(res.path, ou_loop), 1e-4);
  EXPECT_LT(max_residual_norm(euler_lagrange_residual(sys, res.path)), 1e-3);
  EXPECT_NEAR(res.report.action, std::tanh(1.0), 1e-4);
}

TEST(MinimizeAction, StaysAtStableFixedPoint) {
  const PietParams p;
  const auto sys = piet_network(p);
  const auto a = piet_attractors(sys, p);
  const auto res = minimize_action(sys, a.undecided, a.undecided, 3.0, 50);
  EXPECT_LT(res.report.action, 1e-10);
  for (int k = 0; k <= 50; ++k) EXPECT_LT((res.path.node(k) - a.undecided).norm(), 1e-8);
}

TEST(MinimizeAction, OuEnergyAndAngularMomentumConserved) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  const auto res = minimize_action(sys, vec({1.0, 0.0}), vec({0.0, 1.0}), 2.0, 200);
  ASSERT_TRUE(res.report.converged);
  const auto cs = charge_series(sys, res.path, sys.declared_symmetries);
  EXPECT_LT(relative_variation(*cs.energy), 1e-3);
  EXPECT_LT(relative_variation(cs.angular_momentum[0]), 1e-3);
}

TEST(MinimizeAction, EndpointsUntouchedAndActionDecreases) {
  const auto sys = piet_network(PietParams{});
  const auto init = random_path(vec({0.88, -0.29}), vec({-0.29, 0.88}), 4.0, 60, 9);
  const auto res = minimize_action(sys, init);
  EXPECT_EQ(res.path.start(), init.start());
  EXPECT_EQ(res.path.end(), init.end());
  EXPECT_LE(res.report.action, action(sys, init));
  EXPECT_EQ(res.report.initial_action, action(sys, init));
}

TEST(MinimizeAction, IterationCapIsReportedNotThrown) {
  const auto sys = piet_network(PietParams{});
  OptimizerConfig cfg;
  cfg.max_iters = 2;
  const auto res = minimize_action(sys, vec({0.88, -0.29}), vec({-0.29, 0.88}), 20.0, 200, cfg);
  EXPECT_FALSE(res.report.converged);
  EXPECT_EQ(res.report.termination, Termination::MaxIterations);
  EXPECT_EQ(res.report.iterations, 2);
}

TEST(MinimizeAction, ActionNonIncreasingAcrossIterations) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  const auto init = random_path(vec({1, 0}), vec({0, 1}), 2.0, 50, 3, 0.8);
  double prev = action(sys, init);
  for (int iters = 1; iters <= 12; ++iters) {
    OptimizerConfig cfg;
    cfg.max_iters = iters;
    const double s = minimize_action(sys, init, cfg).report.action;
    EXPECT_LE(s, prev);
    prev = s;
  }
}

TEST(MinimizeAction, RejectsStepsIntoNonPositiveDiffusion) {
  // D = max(x, 0) / 2 is singular for x <= 0; strong downward drift pulls the
  // path towards it.
  SdeSystem s;
  s.name = "sqrt_noise";
  s.drift = [](const Vector&, double) -> Vector { return vec({-5.0}); };
  s.noise_map = [](const Vector& x, double) -> Matrix { return Matrix::Constant(1, 1, std::sqrt(std::max(x(0), 0.0))); };
  s.drift_jacobian = [](const Vector&, double) -> Matrix { return Matrix::Zero(1, 1); };
  s.state_dependent_noise = true;
  const auto init = init_path(vec({1.0}), vec({1.0}), 1.0, 40);
  const auto res = minimize_action(s, init);
  EXPECT_LT(res.report.action, action(s, init));
  for (const auto& x : res.path.nodes()) EXPECT_GT(x(0), 0.0);
}

TEST(MinimizeAction, FiniteDifferenceFallback) {
  SdeSystem sys = piet_network(PietParams{});
  sys.drift_jacobian.reset();
  OptimizerConfig cfg;
  EXPECT_THROW(minimize_action(sys, vec({0.88, -0.29}), vec({-0.29, 0.88}), 2.0, 40, cfg), ConfigurationError);
  cfg.fd_fallback = true;
  EXPECT_TRUE(minimize_action(sys, vec({0.88, -0.29}), vec({-0.29, 0.88}), 2.0, 40, cfg).report.converged);
}

TEST(MinimizeAction, WithoutPreconditionerStillConverges) {
  const auto sys = isotropic_ou({1.0, std::sqrt(0.5), 1});
  OptimizerConfig cfg;
  cfg.precondition = false;
  const auto res = minimize_action(sys, vec({1.0}), vec({1.0}), 2.0, 100, cfg);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LT(max_error_vs(res.path, ou_loop), 1e-3);
}

TEST(OptimizerConfig, ValidatesTolerances) {
  OptimizerConfig c;
  c.grad_tol = 0.0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(RefinePath, ReducesErrorOnOuLoop) {
  const auto sys = isotropic_ou({1.0, std::sqrt(0.5), 1});
  const auto coarse = minimize_action(sys, vec({1.0}), vec({1.0}), 2.0, 25);
  const auto fine = refine_path(sys, coarse.path, 4);
  EXPECT_EQ(fine.path.segments(), 100);
  EXPECT_LT(max_error_vs(fine.path, ou_loop), max_error_vs(coarse.path, ou_loop));
  EXPECT_LE(fine.report.action, action(sys, upsample(coarse.path, 4)));
}

TEST(RefinePath, LinearStaysLinear) {
  const auto sys = constant_drift_1d({0.5, 1.0, std::nullopt});
  const auto base = minimize_action(sys, vec({0.0}), vec({-1.0}), 1.0, 20);
  const auto fine = refine_path(sys, base.path, 3);
  EXPECT_LT(max_error_vs(fine.path, [](double t) { return -t; }), 1e-12);
}

TEST(RefinePath, FactorOneRejected) {
  const auto sys = constant_drift_1d({});
  EXPECT_THROW(refine_path(sys, init_path(vec({0}), vec({1}), 1.0, 4), 1), ArgumentError);
}

TEST(MultiStart, SortedAndDeduplicated) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  const auto lin = init_path(vec({1, 0}), vec({-1, 0}), 2.0, 60);
  std::vector<DiscretizedPath> inits{lin, lin, random_path(vec({1, 0}), vec({-1, 0}), 2.0, 60, 1, 1.0)};
  const auto res = multi_start(sys, inits, {}, 2);
  ASSERT_FALSE(res.empty());
  EXPECT_LT(res.size(), 3u);
  for (std::size_t i = 1; i < res.size(); ++i) EXPECT_LE(res[i - 1].report.action, res[i].report.action);
}

TEST(MultiStart, RingArcsCollapseToAxis) {
  // Arcs on either side of the origin relax to the same reflection-symmetric
  // path through the interior, which carries no angular momentum.
  RingParams rp;
  const auto sys = ring_reverse_sde(rp);
  const double T = rp.T - rp.t_min;
  const int K = 100;
  std::vector<DiscretizedPath> inits;
  for (double side : {1.0, -1.0}) {
    std::vector<Vector> nodes;
    for (int k = 0; k <= K; ++k) {
      const double th = side * M_PI * k / K;
      nodes.push_back(vec({std::cos(th), std::sin(th)}));
    }
    nodes.back() = vec({-1.0, 0.0});
    inits.emplace_back(std::move(nodes), T);
  }
  const auto res = multi_start(sys, inits);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_TRUE(res[0].report.converged);
  const auto cs = charge_series(sys, res[0].path);
  for (double l : cs.angular_momentum[0]) EXPECT_LT(std::abs(l), 1e-6);
}

TEST(GradCheck, DegenerateAndNegativeControls) {
  const auto sys = constant_drift_1d({0.5, 1.0, std::nullopt});
  const auto det = [] {
    std::vector<Vector> n;
    for (int k = 0; k <= 10; ++k) n.push_back(vec({0.05 * k}));
    return DiscretizedPath(std::move(n), 1.0);
  }();
  EXPECT_LT(grad_check(sys, det), 1e-5);
  const auto bad = corrupted_jacobian(piet_network(PietParams{}));
  EXPECT_GT(grad_check(bad, random_path(vec({0.88, -0.29}), vec({-0.29, 0.88}), 4.0, 20, 1)), 1e-5);
}
