#pragma once

#include "mlpath/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mlpath {

/// One candidate continuous symmetry of a path Lagrangian.
///
/// The infinitesimal generators are
///   TimeTranslation: dt = 1, dx = xdot (surface term K = L dt)
///   Translation(u):  dt = 0, dx = u
///   Rotation(i, j):  dt = 0, dx_i = -x_j, dx_j = x_i
/// and the associated charges are energy, p.u and L_ij respectively.
struct SymmetrySpec {
  enum class Kind { TimeTranslation, Translation, Rotation };

  Kind kind = Kind::TimeTranslation;
  Vector direction;  // Translation only, unit norm
  int i = 0;         // Rotation only, i < j
  int j = 1;

  static SymmetrySpec time_translation() { return {}; }

  static SymmetrySpec translation(Vector u) {
    SymmetrySpec s;
    s.kind = Kind::Translation;
    const double n = u.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError("translation direction must be a nonzero finite vector");
    s.direction = u / n;
    return s;
  }

  static SymmetrySpec translation_axis(int dim, int axis) {
    Vector u = Vector::Zero(dim);
    u(axis) = 1.0;
    return translation(std::move(u));
  }

  static SymmetrySpec rotation(int a, int b) {
    if (a == b) throw ArgumentError("rotation plane indices must be distinct");
    SymmetrySpec s;
    s.kind = Kind::Rotation;
    s.i = std::min(a, b);
    s.j = std::max(a, b);
    return s;
  }

  /// Throws ArgumentError when the spec cannot act on an N-dimensional state.
  void validate(int state_dim) const {
    switch (kind) {
      case Kind::TimeTranslation:
        return;
      case Kind::Translation:
        if (direction.size() != state_dim)
          throw ArgumentError("translation direction has dimension " + std::to_string(direction.size()) +
                              ", expected " + std::to_string(state_dim));
        if (std::abs(direction.norm() - 1.0) > 1e-12) throw ArgumentError("translation direction must have unit norm");
        return;
      case Kind::Rotation:
        if (i < 0 || j <= i || j >= state_dim)
          throw ArgumentError("rotation plane (" + std::to_string(i) + "," + std::to_string(j) +
                              ") invalid for dimension " + std::to_string(state_dim));
        return;
    }
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::TimeTranslation:
        os << "TimeTranslation";
        break;
      case Kind::Translation:
        os << "Translation(";
        for (Eigen::Index k = 0; k < direction.size(); ++k) os << (k ? "," : "") << direction(k);
        os << ")";
        break;
      case Kind::Rotation:
        os << "Rotation(" << i << "," << j << ")";
        break;
    }
    return os.str();
  }
};

using DriftFn = std::function<Vector(const Vector& x, double t)>;
using NoiseFn = std::function<Matrix(const Vector& x, double t)>;
using JacobianFn = std::function<Matrix(const Vector& x, double t)>;

/// An SDE  dx = f(x,t) dt + G(x,t) dW  together with what is known about its
/// symmetries. Copyable; all members are pure callables.
struct SdeSystem {
  std::string name;
  int state_dim = 1;
  int noise_dim = 1;
  DriftFn drift;
  NoiseFn noise_map;
  std::optional<JacobianFn> drift_jacobian;
  /// Neither f nor G depends explicitly on t.
  bool autonomous = true;
  /// G depends on x. When false, D is treated as x-independent in gradients.
  bool state_dependent_noise = false;
  std::vector<SymmetrySpec> declared_symmetries;
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
};

namespace detail {

inline void check_state(const SdeSystem& sys, const Vector& x, double t) {
  if (x.size() != sys.state_dim)
    throw DimensionError(sys.name + ": state has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(sys.state_dim));
  // Small slack so midpoints and line-search probes at the horizon ends pass.
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  if (!(t >= sys.t_min - slack && t <= sys.t_max + slack)) {
    std::ostringstream os;
    os << sys.name << ": time " << t << " outside valid range [" << sys.t_min << ", " << sys.t_max << "]";
    throw EvaluationDomainError(os.str(), -1);
  }
}

}  // namespace detail

/// f(x, t). Throws EvaluationDomainError naming the first non-finite component.
inline Vector drift_eval(const SdeSystem& sys, const Vector& x, double t) {
  detail::check_state(sys, x, t);
  Vector f = sys.drift(x, t);
  if (f.size() != sys.state_dim) throw DimensionError(sys.name + ": drift returned wrong dimension");
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    if (!std::isfinite(f(k))) {
      std::ostringstream os;
      os << sys.name << ": drift component " << k << " is non-finite (" << f(k) << ") at t=" << t;
      throw EvaluationDomainError(os.str(), static_cast<int>(k));
    }
  }
  return f;
}

inline Matrix noise_eval(const SdeSystem& sys, const Vector& x, double t) {
  detail::check_state(sys, x, t);
  Matrix g = sys.noise_map(x, t);
  if (g.rows() != sys.state_dim || g.cols() != sys.noise_dim)
    throw DimensionError(sys.name + ": noise map returned wrong shape");
  if (!g.allFinite()) throw EvaluationDomainError(sys.name + ": noise map is non-finite", -1);
  return g;
}

namespace detail {

/// Index of the first leading principal minor that fails to factor.
inline int failing_pivot(const Matrix& d) {
  for (Eigen::Index k = 1; k <= d.rows(); ++k) {
    Eigen::LLT<Matrix> llt(d.topLeftCorner(k, k));
    if (llt.info() != Eigen::Success) return static_cast<int>(k - 1);
  }
  return static_cast<int>(d.rows() - 1);
}

inline Matrix symmetric_diffusion(const Matrix& g) {
  Matrix d = 0.5 * g * g.transpose();
  return 0.5 * (d + d.transpose());
}

}  // namespace detail

/// Cholesky factor of D(x,t). Throws PdViolationError if D is not positive definite.
inline Eigen::LLT<Matrix> diffusion_factor(const SdeSystem& sys, const Vector& x, double t, const Matrix& d) {
  Eigen::LLT<Matrix> llt(d);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Matrix& l = llt.matrixLLT();
    for (Eigen::Index k = 0; k < l.rows(); ++k)
      if (!(l(k, k) > 0.0)) ok = false;
  }
  if (!ok) {
    const int pivot = detail::failing_pivot(d);
    std::ostringstream os;
    os << sys.name << ": diffusion tensor not positive definite at t=" << t << ", x=(" << x.transpose()
       << "), failing pivot " << pivot;
    throw PdViolationError(os.str(), x, t, pivot);
  }
  return llt;
}

/// D(x,t) = G G^T / 2, exactly symmetric, verified positive definite.
inline Matrix diffusion_eval(const SdeSystem& sys, const Vector& x, double t) {
  Matrix d = detail::symmetric_diffusion(noise_eval(sys, x, t));
  diffusion_factor(sys, x, t, d);
  return d;
}

/// D(x,t)^{-1} v by Cholesky solve.
inline Vector diffusion_solve(const SdeSystem& sys, const Vector& x, double t, const Vector& v) {
  const Matrix d = detail::symmetric_diffusion(noise_eval(sys, x, t));
  return diffusion_factor(sys, x, t, d).solve(v);
}

/// df/dx, analytic when the system provides it.
inline std::optional<Matrix> analytic_jacobian(const SdeSystem& sys, const Vector& x, double t) {
  if (!sys.drift_jacobian) return std::nullopt;
  detail::check_state(sys, x, t);
  return (*sys.drift_jacobian)(x, t);
}

/// Central-difference Jacobian of the drift.
inline Matrix finite_difference_jacobian(const SdeSystem& sys, const Vector& x, double t, double rel_step = 1e-6) {
  const int n = sys.state_dim;
  Matrix jac(n, n);
  Vector xp = x;
  for (int c = 0; c < n; ++c) {
    const double h = rel_step * std::max(1.0, std::abs(x(c)));
    xp(c) = x(c) + h;
    const Vector fp = drift_eval(sys, xp, t);
    xp(c) = x(c) - h;
    const Vector fm = drift_eval(sys, xp, t);
    xp(c) = x(c);
    jac.col(c) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// True when `spec` appears in the system's declared symmetry list.
inline bool declares(const SdeSystem& sys, const SymmetrySpec& spec) {
  for (const auto& s : sys.declared_symmetries) {
    if (s.kind != spec.kind) continue;
    switch (s.kind) {
      case SymmetrySpec::Kind::TimeTranslation:
        return true;
      case SymmetrySpec::Kind::Translation:
        if ((s.direction - spec.direction).norm() < 1e-12) return true;
        break;
      case SymmetrySpec::Kind::Rotation:
        if (s.i == spec.i && s.j == spec.j) return true;
        break;
    }
  }
  return false;
}

}  // namespace mlpath
