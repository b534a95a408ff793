#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mlpath;
using namespace mlpath::testing;

TEST(DriftEval, ConstantDriftIsConstant) {
  const auto sys = constant_drift_1d({1.0, 1.0, std::nullopt});
  for (double x : {-3.0, 0.0, 7.5})
    for (double t : {0.0, 2.0}) EXPECT_EQ(drift_eval(sys, vec({x}), t)(0), 1.0);
}

TEST(DriftEval, OuFlipsSign) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  const Vector f = drift_eval(sys, vec({2.0, -3.0}), 0.4);
  EXPECT_EQ(f(0), -2.0);
  EXPECT_EQ(f(1), 3.0);
}

TEST(DriftEval, PietFixedPointsHaveVanishingDrift) {
  const PietParams p;
  const auto sys = piet_network(p);
  for (const auto& fp : find_fixed_points(sys, p.search_box())) EXPECT_LT(drift_eval(sys, fp.point, 0.0).norm(), 1e-10);
}

TEST(DriftEval, NonFiniteOutputNamesComponent) {
  SdeSystem s = constant_noise(Matrix::Identity(2, 2));
  s.drift = [](const Vector& x, double) -> Vector { return vec({0.0, 1.0 / x(1)}); };
  try {
    drift_eval(s, vec({1.0, 0.0}), 0.0);
    FAIL() << "expected EvaluationDomainError";
  } catch (const EvaluationDomainError& e) {
    EXPECT_EQ(e.component(), 1);
  }
}

TEST(DriftEval, TimeOutsideRangeIsRejected) {
  const auto sys = ring_reverse_sde(RingParams{});
  EXPECT_THROW(drift_eval(sys, vec({1.0, 0.0}), 5.0), EvaluationDomainError);
}

TEST(DiffusionEval, ScalarHalfSigmaSquared) {
  const auto sys = constant_drift_1d({1.0, 1.0, std::nullopt});
  EXPECT_DOUBLE_EQ(diffusion_eval(sys, vec({0.0}), 0.0)(0, 0), 0.5);
}

TEST(DiffusionEval, RingIsTimeTimesIdentity) {
  RingParams p;
  const auto sys = ring_reverse_sde(p);
  for (double u : {0.0, 0.3, 0.9}) {
    const Matrix d = diffusion_eval(sys, vec({0.4, -1.2}), u);
    EXPECT_NEAR((d - (p.T - u) * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
  }
}

TEST(DiffusionEval, MatrixProductOracle) {
  Matrix g(2, 2);
  g << 1, 0, 1, 1;
  const auto sys = constant_noise(g);
  Matrix expected(2, 2);
  expected << 0.5, 0.5, 0.5, 1.0;
  EXPECT_NEAR((diffusion_eval(sys, vec({0, 0}), 0.0) - expected).norm(), 0.0, 1e-15);
}

TEST(DiffusionEval, SingularNoiseReportsPivot) {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 1.0;
  const auto sys = constant_noise(g);
  try {
    diffusion_eval(sys, vec({0.5, -0.5}), 0.25);
    FAIL() << "expected PdViolationError";
  } catch (const PdViolationError& e) {
    EXPECT_EQ(e.pivot(), 1);
    EXPECT_EQ(e.t(), 0.25);
    EXPECT_EQ(e.x()(0), 0.5);
  }
}

TEST(DiffusionEval, SymmetricToMachinePrecision) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix g(3, 3);
  for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = normal(rng);
  const auto sys = constant_noise(g);
  const Matrix d = diffusion_eval(sys, Vector::Zero(3), 0.0);
  EXPECT_LE((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-14 * d.norm());
}

TEST(DiffusionSolve, Examples) {
  const auto sys1 = constant_drift_1d({1.0, 1.0, std::nullopt});
  EXPECT_NEAR(diffusion_solve(sys1, vec({0}), 0, vec({1}))(0), 2.0, 1e-15);

  const auto id = constant_noise(std::sqrt(2.0) * Matrix::Identity(2, 2));
  const Vector v = vec({0.3, -4.0});
  EXPECT_NEAR((diffusion_solve(id, vec({0, 0}), 0, v) - v).norm(), 0.0, 1e-15);

  Matrix g(2, 2);
  g << 1, 0, 1, 1;
  const auto sys2 = constant_noise(g);
  const Vector r = diffusion_solve(sys2, vec({0, 0}), 0, vec({1, 0}));
  EXPECT_NEAR(r(0), 4.0, 1e-12);
  EXPECT_NEAR(r(1), -2.0, 1e-12);
}

TEST(DiffusionSolve, MultiplyBackRecoversInput) {
  for (const auto& c : builtin_cases()) {
    const auto samples = random_samples(c.sys.state_dim, c.t_start, c.t_start + c.T, 11, 10);
    for (const auto& s : samples) {
      const Matrix d = diffusion_eval(c.sys, s.x, s.t);
      const Vector r = diffusion_solve(c.sys, s.x, s.t, s.xdot);
      EXPECT_LE((d * r - s.xdot).norm(), 1e-10 * s.xdot.norm()) << c.sys.name;
    }
  }
}

TEST(Autonomous, DriftAndNoiseIgnoreTime) {
  for (const auto& c : builtin_cases()) {
    if (!c.sys.autonomous) continue;
    for (const auto& s : random_samples(c.sys.state_dim, 0.0, 1.0, 5, 5)) {
      EXPECT_TRUE((drift_eval(c.sys, s.x, 0.1) - drift_eval(c.sys, s.x, 3.7)).isZero(0.0)) << c.sys.name;
      EXPECT_TRUE((noise_eval(c.sys, s.x, 0.1) - noise_eval(c.sys, s.x, 3.7)).isZero(0.0)) << c.sys.name;
    }
  }
}

TEST(Jacobian, AnalyticMatchesFiniteDifferences) {
  for (const auto& c : builtin_cases()) {
    for (const auto& s : random_samples(c.sys.state_dim, c.t_start, c.t_start + c.T, 9, 10)) {
      const Matrix a = *analytic_jacobian(c.sys, s.x, s.t);
      const Matrix fd = finite_difference_jacobian(c.sys, s.x, s.t);
      EXPECT_LE((a - fd).norm(), 1e-5 * std::max(1.0, a.norm())) << c.sys.name;
    }
  }
}

TEST(EulerMaruyama, ZeroNoiseIsExplicitEuler) {
  SdeSystem s = constant_noise(Matrix::Zero(2, 2));
  s.drift = [](const Vector& x, double t) -> Vector { return vec({-x(1), x(0) * std::cos(t)}); };
  const double dt = 0.01;
  const auto tr = euler_maruyama(s, vec({1.0, 0.5}), 0.0, 1.0, dt, 42);
  Vector x = vec({1.0, 0.5});
  ASSERT_EQ(tr.size(), 101u);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(tr.states[k], x);
    x += dt * s.drift(x, tr.times[k]);
  }
}

TEST(EulerMaruyama, ForwardDiffusionDiscreteVariance) {
  // Var x(T) on the Euler grid is sum 2 t_k dt = T^2 - T dt exactly.
  const auto sys = forward_diffusion(1);
  EnsembleOptions o;
  o.n_paths = 20000;
  o.dt = 0.01;
  o.seed = 99;
  const auto ends = ensemble_endpoints(sys, vec({0.0}), 0.0, 1.0, o);
  double m = 0, m2 = 0;
  for (const auto& e : ends) {
    m += (*e)(0);
    m2 += (*e)(0) * (*e)(0);
  }
  const double n = static_cast<double>(ends.size());
  m /= n;
  const double var = (m2 - n * m * m) / (n - 1);
  const double expected = 1.0 - 0.01;
  EXPECT_LT(std::abs(var - expected), 3.0 * expected * std::sqrt(2.0 / (n - 1)));
}

TEST(EulerMaruyama, DeterministicAcrossThreadCounts) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  EnsembleOptions o;
  o.n_paths = 64;
  o.dt = 1e-2;
  o.seed = 1234;
  std::string out[2];
  int idx = 0;
  for (unsigned threads : {1u, 8u}) {
    o.threads = threads;
    const auto ens = simulate_ensemble(sys, vec({1.0, 0.0}), 0.0, 1.0, o);
    std::ostringstream os;
    for (const auto& tr : ens.trajectories) write_csv(os, tr);
    out[idx++] = os.str();
  }
  EXPECT_EQ(out[0], out[1]);
  EXPECT_FALSE(out[0].empty());
}

TEST(EulerMaruyama, SameSeedSamePathDifferentSeedDifferentPath) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  const auto a = euler_maruyama(sys, vec({0, 0}), 0, 1, 1e-2, 5);
  const auto b = euler_maruyama(sys, vec({0, 0}), 0, 1, 1e-2, 5);
  const auto c = euler_maruyama(sys, vec({0, 0}), 0, 1, 1e-2, 6);
  EXPECT_EQ(a.states.back(), b.states.back());
  EXPECT_NE(a.states.back(), c.states.back());
  EXPECT_EQ(*a.seed, 5u);
}

TEST(EulerMaruyama, BlowUpRaisesDivergenceWithStep) {
  SdeSystem s = constant_noise(Matrix::Identity(1, 1));
  s.drift = [](const Vector& x, double) -> Vector { return 10.0 * x; };
  try {
    euler_maruyama(s, vec({1.0}), 0.0, 10.0, 0.01, 1, 1e3);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_LT(e.step(), 1000u);
  }
  EnsembleOptions o;
  o.n_paths = 5;
  o.dt = 0.01;
  o.divergence_bound = 1e3;
  const auto ens = simulate_ensemble(s, vec({1.0}), 0.0, 10.0, o);
  EXPECT_EQ(ens.diverged.size(), 5u);
  EXPECT_TRUE(ens.trajectories.empty());
}

TEST(EulerMaruyama, RejectsBadSteps) {
  const auto sys = forward_diffusion(1);
  EXPECT_THROW(euler_maruyama(sys, vec({0}), 0, 1, 0.0, 1), ArgumentError);
  EXPECT_THROW(euler_maruyama(sys, vec({0}), 0, 0.001, 0.01, 1), ArgumentError);
}

TEST(TrajectorySeed, IndependentOfOrderAndDistinct) {
  EXPECT_EQ(trajectory_seed(7, 3), trajectory_seed(7, 3));
  EXPECT_NE(trajectory_seed(7, 3), trajectory_seed(7, 4));
  EXPECT_NE(trajectory_seed(7, 3), trajectory_seed(8, 3));
}

class BridgeFilter : public ::testing::Test {
protected:
  static const Ensemble& ensemble() {
    static const Ensemble e = [] {
      const auto sys = constant_drift_1d({0.5, 1.0, std::make_pair(-1.0, 1.0)});
      EnsembleOptions o;
      o.n_paths = 20000;
      o.dt = 1e-2;
      o.seed = 2024;
      return simulate_ensemble(sys, vec({0.0}), 0.0, 1.0, o);
    }();
    return e;
  }
};

TEST_F(BridgeFilter, InfiniteToleranceKeepsAll) {
  BridgeCriteria c;
  c.xf = vec({-1.0});
  c.T = 1.0;
  EXPECT_EQ(ensemble_bridge_filter(ensemble().trajectories, vec({0.0}), c).size(), ensemble().trajectories.size());
}

TEST_F(BridgeFilter, ZeroToleranceKeepsNone) {
  BridgeCriteria c;
  c.xf = vec({-1.0});
  c.T = 1.0;
  c.tol = 0.0;
  EXPECT_TRUE(ensemble_bridge_filter(ensemble().trajectories, vec({0.0}), c).empty());
}

TEST_F(BridgeFilter, EndpointBridgeMeanIsLinear) {
  // A Brownian bridge with constant drift has mean x0 + (xf - x0) t / T.
  BridgeCriteria c;
  c.xf = vec({-1.0});
  c.T = 1.0;
  c.tol = 0.1;
  const auto kept = ensemble_bridge_filter(ensemble().trajectories, vec({0.0}), c);
  ASSERT_GT(kept.size(), 200u);
  double worst = 0.0;
  for (std::size_t k = 0; k < kept.front().size(); ++k) {
    double m = 0.0;
    for (const auto& tr : kept) m += tr.states[k](0);
    m /= static_cast<double>(kept.size());
    worst = std::max(worst, std::abs(m + kept.front().times[k]));
  }
  // Bridge standard deviation is at most 1/2, so 4 standard errors:
  EXPECT_LT(worst, 4.0 * 0.5 / std::sqrt(static_cast<double>(kept.size())) + 0.1);
}

TEST_F(BridgeFilter, FirstPassageTruncatesAtBoundary) {
  BridgeCriteria c;
  c.xf = vec({-1.0});
  c.T = 0.6;
  c.tol = 1e-9;
  c.first_passage = FirstPassage{-1.0, 1.0, 0.2};
  const auto kept = ensemble_bridge_filter(ensemble().trajectories, vec({0.0}), c);
  ASSERT_FALSE(kept.empty());
  for (const auto& tr : kept) {
    EXPECT_LE(tr.states.back()(0), -1.0);
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
      EXPECT_GT(tr.states[k](0), -1.0);
      EXPECT_LT(tr.states[k](0), 1.0);
    }
    EXPECT_LE(std::abs(tr.t_end() - 0.6), 0.2 + 1e-12);
  }
}

TEST(TrajectoryCsv, RoundTripsExactly) {
  const auto sys = isotropic_ou({1.0, 1.0, 2});
  const auto tr = euler_maruyama(sys, vec({0.1, 0.2}), 0.0, 0.5, 0.01, 8);
  std::stringstream ss;
  write_csv(ss, tr);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(back.times[k], tr.times[k]);
    EXPECT_EQ(back.states[k], tr.states[k]);
  }
  std::stringstream first_lines(ss.str());
  std::string header;
  std::getline(first_lines, header);
  EXPECT_EQ(header, "k,t,x0,x1");
}

TEST(TrajectoryCsv, MalformedInputNamesLine) {
  std::stringstream ss("k,t,x0\n0,0,1\n1,0.5,abc\n");
  try {
    read_csv(ss);
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(TrajectoryValidate, RejectsNonUniformAndNonFinite) {
  Trajectory tr;
  tr.times = {0.0, 0.1, 0.3};
  tr.states = {vec({0}), vec({1}), vec({2})};
  EXPECT_THROW(validate(tr), ArgumentError);
  tr.times = {0.0, 0.1, 0.2};
  tr.states[1](0) = std::nan("");
  EXPECT_THROW(validate(tr), ArgumentError);
  tr.states[1](0) = 1.0;
  EXPECT_NO_THROW(validate(tr));
}
