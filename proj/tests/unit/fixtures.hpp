#pragma once

#include "mlpath/mlpath.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mlpath::testing {

/// dx = f dt + G dW with zero drift and a constant noise matrix.
inline SdeSystem constant_noise(const Matrix& g) {
  SdeSystem s;
  s.name = "constant_noise";
  s.state_dim = static_cast<int>(g.rows());
  s.noise_dim = static_cast<int>(g.cols());
  s.drift = [n = g.rows()](const Vector&, double) -> Vector { return Vector::Zero(n); };
  s.noise_map = [g](const Vector&, double) -> Matrix { return g; };
  s.drift_jacobian = [n = g.rows()](const Vector&, double) -> Matrix { return Matrix::Zero(n, n); };
  return s;
}

/// f = -x with G = diag(1, 2): rotation breaks the quadratic form of D^{-1}.
inline SdeSystem anisotropic_ou() {
  SdeSystem s;
  s.name = "anisotropic_ou";
  s.state_dim = 2;
  s.noise_dim = 2;
  s.drift = [](const Vector& x, double) -> Vector { return -x; };
  s.noise_map = [](const Vector&, double) -> Matrix {
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = 2.0;
    return g;
  };
  s.drift_jacobian = [](const Vector&, double) -> Matrix { return -Matrix::Identity(2, 2); };
  s.declared_symmetries = {SymmetrySpec::time_translation()};
  return s;
}

/// f = -x + sin(t), G = 1 + x^2 / 2: state-dependent noise and explicit time.
inline SdeSystem multiplicative_1d() {
  SdeSystem s;
  s.name = "multiplicative";
  s.state_dim = 1;
  s.noise_dim = 1;
  s.drift = [](const Vector& x, double t) -> Vector { return Vector::Constant(1, -x(0) + std::sin(t)); };
  s.noise_map = [](const Vector& x, double) -> Matrix { return Matrix::Constant(1, 1, 1.0 + 0.5 * x(0) * x(0)); };
  s.drift_jacobian = [](const Vector&, double) -> Matrix { return Matrix::Constant(1, 1, -1.0); };
  s.autonomous = false;
  s.state_dependent_noise = true;
  return s;
}

/// A copy of `sys` whose analytic Jacobian is off by 10%.
inline SdeSystem corrupted_jacobian(SdeSystem sys) {
  auto good = *sys.drift_jacobian;
  sys.drift_jacobian = [good](const Vector& x, double t) -> Matrix { return 1.1 * good(x, t); };
  sys.name += "_corrupted";
  return sys;
}

/// Straight line from x0 to xf with smooth random bumps of size `amp`.
inline DiscretizedPath random_path(const Vector& x0, const Vector& xf, double T, int K, std::uint64_t seed,
                                   double amp = 0.3, double t_start = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto path = init_path(x0, xf, T, K, LinearInit{}, t_start);
  std::vector<Vector> nodes = path.nodes();
  const int n = static_cast<int>(x0.size());
  for (int mode = 1; mode <= 3; ++mode) {
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = amp * normal(rng) / mode;
    for (int k = 1; k < K; ++k) nodes[static_cast<std::size_t>(k)] += std::sin(M_PI * mode * k / K) * c;
  }
  return DiscretizedPath(std::move(nodes), T, t_start);
}

/// Random phase-space samples with |x|, |xdot| of order `scale`.
inline std::vector<PhaseSample> random_samples(int dim, double t_lo, double t_hi, std::uint64_t seed, int count = 20,
                                               double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(t_lo, t_hi);
  std::vector<PhaseSample> out;
  for (int s = 0; s < count; ++s) {
    PhaseSample p;
    p.x = Vector(dim);
    p.xdot = Vector(dim);
    for (int i = 0; i < dim; ++i) {
      p.x(i) = scale * normal(rng);
      p.xdot(i) = scale * normal(rng);
    }
    p.t = unif(rng);
    out.push_back(std::move(p));
  }
  return out;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Every built-in system with a valid time window for paths: (system, t_start, T, x0, xf).
struct Case {
  SdeSystem sys;
  double t_start;
  double T;
  Vector x0;
  Vector xf;
};

inline std::vector<Case> builtin_cases() {
  std::vector<Case> out;
  out.push_back({constant_drift_1d({0.5, 1.0, std::nullopt}), 0.0, 1.0, vec({0.0}), vec({-1.0})});
  out.push_back({isotropic_ou({1.0, 0.7, 1}), 0.0, 2.0, vec({1.0}), vec({1.0})});
  out.push_back({isotropic_ou({1.5, 0.8, 3}), 0.0, 1.5, vec({1.0, 0.0, -0.5}), vec({0.0, 1.0, 0.5})});
  out.push_back({forward_diffusion(2), 0.2, 1.0, vec({0.0, 0.0}), vec({1.0, -0.5})});
  out.push_back({piet_network(PietParams{}), 0.0, 5.0, vec({0.88, -0.29}), vec({-0.29, 0.88})});
  RingParams rp;
  out.push_back({ring_reverse_sde(rp), 0.0, rp.T - rp.t_min, vec({2.0, 1.0}), vec({0.36, 1.13})});
  return out;
}

}  // namespace mlpath::testing
