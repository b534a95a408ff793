#pragma once

#include "mlpath/fixed_points.hpp"
#include "mlpath/ring.hpp"
#include "mlpath/sde_system.hpp"
#include "mlpath/trajectory.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

namespace mlpath {

// ---------------------------------------------------------------------------
// Drift-diffusion decision model: dx = v dt + sigma dW.

struct DriftDiffusionParams {
  double v = 1.0;
  double sigma = 1.0;
  std::optional<std::pair<double, double>> bounds;  // absorbing, simulation only

  void validate() const {
    if (!(sigma > 0.0)) throw ArgumentError("drift-diffusion: sigma must be positive");
    if (bounds && !(bounds->first < bounds->second)) throw ArgumentError("drift-diffusion: bounds must be ordered");
  }
};

/// f = v, D = sigma^2 / 2. Declares Translation and TimeTranslation.
inline SdeSystem constant_drift_1d(const DriftDiffusionParams& p) {
  p.validate();
  SdeSystem s;
  s.name = "constant_drift";
  s.state_dim = 1;
  s.noise_dim = 1;
  s.drift = [v = p.v](const Vector&, double) { return Vector::Constant(1, v); };
  s.noise_map = [sigma = p.sigma](const Vector&, double) { return Matrix::Constant(1, 1, sigma); };
  s.drift_jacobian = [](const Vector&, double) { return Matrix::Zero(1, 1); };
  s.autonomous = true;
  s.declared_symmetries = {SymmetrySpec::translation_axis(1, 0), SymmetrySpec::time_translation()};
  return s;
}

// ---------------------------------------------------------------------------
// Isotropic Ornstein-Uhlenbeck process.

struct OuParams {
  double k = 1.0;
  double sigma = 1.0;
  int dim = 2;

  void validate() const {
    if (!(k > 0.0)) throw ArgumentError("ou: k must be positive");
    if (!(sigma > 0.0)) throw ArgumentError("ou: sigma must be positive");
    if (dim < 1) throw ArgumentError("ou: dimension must be positive");
  }
};

/// f = -k x, G = sqrt(2) sigma I so D = sigma^2 I. Declares TimeTranslation
/// and every coordinate rotation plane.
inline SdeSystem isotropic_ou(const OuParams& p) {
  p.validate();
  SdeSystem s;
  s.name = "ou";
  s.state_dim = p.dim;
  s.noise_dim = p.dim;
  s.drift = [k = p.k](const Vector& x, double) -> Vector { return -k * x; };
  s.noise_map = [g = std::sqrt(2.0) * p.sigma, n = p.dim](const Vector&, double) -> Matrix {
    return g * Matrix::Identity(n, n);
  };
  s.drift_jacobian = [k = p.k, n = p.dim](const Vector&, double) -> Matrix { return -k * Matrix::Identity(n, n); };
  s.autonomous = true;
  s.declared_symmetries.push_back(SymmetrySpec::time_translation());
  for (int i = 0; i < p.dim; ++i)
    for (int j = i + 1; j < p.dim; ++j) s.declared_symmetries.push_back(SymmetrySpec::rotation(i, j));
  return s;
}

// ---------------------------------------------------------------------------
// Forward noising process of a diffusion model: dx = sqrt(2t) dW.

/// f = 0, G = sqrt(2t) I, valid for t >= 0 (D is singular at t = 0).
inline SdeSystem forward_diffusion(int dim = 1) {
  if (dim < 1) throw ArgumentError("forward diffusion: dimension must be positive");
  SdeSystem s;
  s.name = "forward_diffusion";
  s.state_dim = dim;
  s.noise_dim = dim;
  s.drift = [dim](const Vector&, double) -> Vector { return Vector::Zero(dim); };
  s.noise_map = [dim](const Vector&, double t) -> Matrix {
    return std::sqrt(2.0 * std::max(t, 0.0)) * Matrix::Identity(dim, dim);
  };
  s.drift_jacobian = [dim](const Vector&, double) -> Matrix { return Matrix::Zero(dim, dim); };
  s.autonomous = false;
  s.t_min = 0.0;
  for (int i = 0; i < dim; ++i) s.declared_symmetries.push_back(SymmetrySpec::translation_axis(dim, i));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) s.declared_symmetries.push_back(SymmetrySpec::rotation(i, j));
  return s;
}

// ---------------------------------------------------------------------------
// Three-attractor tanh network (two decision states and one undecided state).

struct PietParams {
  double mu0 = 0.1;
  double A = 0.8;
  double I = 0.4;
  double c = 0.5;
  double n = 0.2;
  double tau = 1.0;
  double sigma = 0.1;

  void validate() const {
    for (double v : {mu0, A, I, c, n, tau, sigma})
      if (!std::isfinite(v)) throw ArgumentError("piet: parameters must be finite");
    if (!(tau > 0.0)) throw ArgumentError("piet: tau must be positive");
    if (!(n > 0.0)) throw ArgumentError("piet: n must be positive");
    if (!(sigma > 0.0)) throw ArgumentError("piet: sigma must be positive");
  }

  /// Every fixed point satisfies mu0 - I <= x, y <= mu0 + A.
  FixedPointSearch search_box(double margin = 0.1) const {
    FixedPointSearch s;
    s.lower = Vector::Constant(2, mu0 - I - margin);
    s.upper = Vector::Constant(2, mu0 + A + margin);
    return s;
  }
};

class TristabilityError : public ConfigurationError {
public:
  using ConfigurationError::ConfigurationError;
};

/// tau xdot = mu0 + A/2 [tanh((x-c)/n) + 1] - I/2 [tanh((y-c)/n) + 1] - x + sqrt(2 tau) sigma eta_x
/// tau ydot = mu0 + A/2 [tanh((y-c)/n) + 1] - I/2 [tanh((x-c)/n) + 1] - y + sqrt(2 tau) sigma eta_y
/// so D = sigma^2 / tau I. With require_tristable, construction fails unless
/// the deterministic system has exactly three stable fixed points.
inline SdeSystem piet_network(const PietParams& p, bool require_tristable = true) {
  p.validate();
  SdeSystem s;
  s.name = "piet";
  s.state_dim = 2;
  s.noise_dim = 2;
  s.drift = [p](const Vector& z, double) -> Vector {
    const double hx = std::tanh((z(0) - p.c) / p.n) + 1.0;
    const double hy = std::tanh((z(1) - p.c) / p.n) + 1.0;
    Vector f(2);
    f(0) = (p.mu0 + 0.5 * p.A * hx - 0.5 * p.I * hy - z(0)) / p.tau;
    f(1) = (p.mu0 + 0.5 * p.A * hy - 0.5 * p.I * hx - z(1)) / p.tau;
    return f;
  };
  s.noise_map = [g = p.sigma * std::sqrt(2.0 / p.tau)](const Vector&, double) -> Matrix {
    return g * Matrix::Identity(2, 2);
  };
  s.drift_jacobian = [p](const Vector& z, double) -> Matrix {
    const double tx = std::tanh((z(0) - p.c) / p.n);
    const double ty = std::tanh((z(1) - p.c) / p.n);
    const double sx = (1.0 - tx * tx) / p.n;
    const double sy = (1.0 - ty * ty) / p.n;
    Matrix j(2, 2);
    j << 0.5 * p.A * sx - 1.0, -0.5 * p.I * sy, -0.5 * p.I * sx, 0.5 * p.A * sy - 1.0;
    return j / p.tau;
  };
  s.autonomous = true;
  s.declared_symmetries = {SymmetrySpec::time_translation()};
  if (require_tristable) {
    const auto fps = find_fixed_points(s, p.search_box());
    const auto stable = stable_only(fps);
    if (stable.size() != 3) {
      std::ostringstream os;
      os << "piet: expected exactly 3 stable fixed points, found " << stable.size() << " stable among "
         << fps.size() << ":";
      for (const auto& f : fps)
        os << " (" << f.point(0) << ", " << f.point(1) << (f.stable ? ", stable)" : ", unstable)");
      throw TristabilityError(os.str());
    }
  }
  return s;
}

/// The three stable points ordered (decision A, undecided, decision B): the
/// undecided point lies on the diagonal x = y.
struct PietAttractors {
  Vector decision_a;   // x < y
  Vector undecided;    // x = y
  Vector decision_b;   // x > y
};

inline PietAttractors piet_attractors(const SdeSystem& sys, const PietParams& p) {
  const auto stable = stable_only(find_fixed_points(sys, p.search_box()));
  if (stable.size() != 3) throw TristabilityError("piet: not tristable");
  PietAttractors a;
  for (const auto& f : stable) {
    const double d = f.point(0) - f.point(1);
    if (std::abs(d) < 1e-8)
      a.undecided = f.point;
    else if (d < 0)
      a.decision_a = f.point;
    else
      a.decision_b = f.point;
  }
  if (a.undecided.size() == 0 || a.decision_a.size() == 0 || a.decision_b.size() == 0)
    throw TristabilityError("piet: stable points are not arranged symmetrically about x = y");
  return a;
}

// ---------------------------------------------------------------------------
// Ring data distribution under reverse diffusion.

/// Reverse SDE  dx/du = 2 t s(x, t) + sqrt(2t) eta  with t(u) = T - u and
/// u in [0, T - t_min]. D = t I. Declares Rotation(0,1); not autonomous.
inline SdeSystem ring_reverse_sde(const RingParams& p) {
  p.validate();
  SdeSystem s;
  s.name = "ring";
  s.state_dim = 2;
  s.noise_dim = 2;
  s.drift = [p](const Vector& x, double u) -> Vector {
    const double t = p.T - u;
    return 2.0 * t * ring_score(x, t, p);
  };
  s.noise_map = [p](const Vector&, double u) -> Matrix {
    return std::sqrt(2.0 * (p.T - u)) * Matrix::Identity(2, 2);
  };
  s.drift_jacobian = [p](const Vector& x, double u) -> Matrix {
    const double t = p.T - u;
    return 2.0 * t * ring_score_jacobian(x, t, p);
  };
  s.autonomous = false;
  s.t_min = 0.0;
  s.t_max = p.T - p.t_min;
  s.declared_symmetries = {SymmetrySpec::rotation(0, 1)};
  return s;
}

/// Probability-flow ODE  dx/dt = -t s(x, t)  integrated by classical RK4 from
/// t = T down to t = t_min. Rows run in descending t; the stored time axis is
/// the internal time u = T - t shared with ring_reverse_sde.
inline Trajectory pf_ode_trajectory(const Vector& xT, const RingParams& p, double dt) {
  p.validate();
  if (!(dt > 0.0)) throw ArgumentError("pf-ode: dt must be positive");
  if (xT.size() != 2) throw DimensionError("pf-ode: state must be 2D");
  const double span = p.T - p.t_min;
  const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-12));
  const double h = span / static_cast<double>(steps);
  // dx/du = t(u) s(x, t(u))
  const auto rhs = [&](const Vector& x, double u) -> Vector {
    const double t = p.T - u;
    return t * ring_score(x, t, p);
  };
  Trajectory tr;
  Vector x = xT;
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    const double u = static_cast<double>(k) * h;
    const Vector k1 = rhs(x, u);
    const Vector k2 = rhs(x + 0.5 * h * k1, u + 0.5 * h);
    const Vector k3 = rhs(x + 0.5 * h * k2, u + 0.5 * h);
    const Vector k4 = rhs(x + h * k3, u + h);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw EvaluationDomainError("pf-ode: non-finite state at step " + std::to_string(k + 1), -1);
    tr.times.push_back(static_cast<double>(k + 1) * h);
    tr.states.push_back(x);
  }
  return tr;
}

}  // namespace mlpath
