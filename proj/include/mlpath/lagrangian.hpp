#pragma once

#include "mlpath/path.hpp"
#include "mlpath/sde_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mlpath {

/// How the drift Jacobian is obtained for gradients and residuals.
enum class JacobianSource {
  Analytic,          // require system.drift_jacobian
  FiniteDifference,  // always central differences
  Auto,              // analytic if present, else central differences
};

/// Everything the action, its gradient and the charges need on one segment.
struct SegmentState {
  Vector x;      // midpoint state
  Vector xdot;   // segment velocity
  double t = 0;  // midpoint time
  Vector f;
  Vector r;         // xdot - f
  Vector momentum;  // D^{-1} r / 2
  double lagrangian = 0;
};

namespace detail {

inline SegmentState evaluate_segment(const SdeSystem& sys, Vector x, Vector xdot, double t) {
  if (xdot.size() != sys.state_dim) throw DimensionError(sys.name + ": velocity has wrong dimension");
  SegmentState s;
  s.f = drift_eval(sys, x, t);
  const Matrix d = symmetric_diffusion(noise_eval(sys, x, t));
  const auto llt = diffusion_factor(sys, x, t, d);
  s.r = xdot - s.f;
  s.momentum = 0.5 * llt.solve(s.r);
  s.lagrangian = 0.5 * s.r.dot(s.momentum);
  s.x = std::move(x);
  s.xdot = std::move(xdot);
  s.t = t;
  return s;
}

inline Matrix drift_jacobian(const SdeSystem& sys, const Vector& x, double t, JacobianSource src) {
  if (src != JacobianSource::FiniteDifference) {
    if (auto j = analytic_jacobian(sys, x, t)) return *j;
    if (src == JacobianSource::Analytic)
      throw ConfigurationError(sys.name + ": no analytic drift Jacobian and finite-difference fallback disabled");
  }
  return finite_difference_jacobian(sys, x, t);
}

/// dL/dx on a segment: -J^T p, minus p^T (dD/dx_i) p when D depends on x.
inline Vector lagrangian_dx(const SdeSystem& sys, const SegmentState& s, JacobianSource src) {
  Vector g = -drift_jacobian(sys, s.x, s.t, src).transpose() * s.momentum;
  if (sys.state_dependent_noise) {
    Vector xp = s.x;
    for (int c = 0; c < sys.state_dim; ++c) {
      const double h = 1e-6 * std::max(1.0, std::abs(s.x(c)));
      xp(c) = s.x(c) + h;
      const Matrix dp = symmetric_diffusion(noise_eval(sys, xp, s.t));
      xp(c) = s.x(c) - h;
      const Matrix dm = symmetric_diffusion(noise_eval(sys, xp, s.t));
      xp(c) = s.x(c);
      g(c) -= s.momentum.dot((dp - dm) * s.momentum) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace detail

/// L(x, xdot, t) = (xdot - f)^T D^{-1} (xdot - f) / 4.
inline double lagrangian(const SdeSystem& sys, const Vector& x, const Vector& xdot, double t) {
  return detail::evaluate_segment(sys, x, xdot, t).lagrangian;
}

/// Midpoint-rule segment states for a whole path.
inline std::vector<SegmentState> segment_states(const SdeSystem& sys, const DiscretizedPath& path) {
  if (path.dim() != sys.state_dim) throw DimensionError(sys.name + ": path dimension mismatch");
  std::vector<SegmentState> out;
  out.reserve(static_cast<std::size_t>(path.segments()));
  for (int k = 0; k < path.segments(); ++k)
    out.push_back(detail::evaluate_segment(sys, path.midpoint(k), path.velocity(k), path.midpoint_time(k)));
  return out;
}

/// S = sum_k dt L(xbar_k, (x_{k+1} - x_k)/dt, tbar_k).
inline double action(const SdeSystem& sys, const DiscretizedPath& path) {
  if (path.dim() != sys.state_dim) throw DimensionError(sys.name + ": path dimension mismatch");
  double s = 0.0;
  for (int k = 0; k < path.segments(); ++k)
    s += detail::evaluate_segment(sys, path.midpoint(k), path.velocity(k), path.midpoint_time(k)).lagrangian;
  return s * path.dt();
}

struct ActionAndGradient {
  double action = 0;
  Vector gradient;  // (K-1) N, interior nodes only
};

/// Exact gradient of the discrete action with respect to interior nodes:
///   dS/dx_k = dt (Lx_{k-1} + Lx_k) / 2 + p_{k-1} - p_k.
inline ActionAndGradient action_with_gradient(const SdeSystem& sys, const DiscretizedPath& path,
                                              JacobianSource src = JacobianSource::Analytic) {
  const auto segs = segment_states(sys, path);
  const int n = path.dim();
  const int K = path.segments();
  const double h = path.dt();
  ActionAndGradient out;
  out.gradient = Vector::Zero((K - 1) * n);
  double s = 0.0;
  for (int k = 0; k < K; ++k) {
    const auto& seg = segs[static_cast<std::size_t>(k)];
    s += seg.lagrangian;
    const Vector lx = detail::lagrangian_dx(sys, seg, src);
    // segment k touches nodes k and k+1
    if (k >= 1) out.gradient.segment((k - 1) * n, n) += 0.5 * h * lx - seg.momentum;
    if (k + 1 <= K - 1) out.gradient.segment(k * n, n) += 0.5 * h * lx + seg.momentum;
  }
  out.action = s * h;
  return out;
}

inline Vector action_gradient(const SdeSystem& sys, const DiscretizedPath& path,
                              JacobianSource src = JacobianSource::Analytic) {
  return action_with_gradient(sys, path, src).gradient;
}

/// Discrete dL/dx - d/dt dL/dxdot at each interior node; equals the action
/// gradient divided by dt.
inline std::vector<Vector> euler_lagrange_residual(const SdeSystem& sys, const DiscretizedPath& path,
                                                   JacobianSource src = JacobianSource::Analytic) {
  const Vector g = action_gradient(sys, path, src);
  const int n = path.dim();
  std::vector<Vector> out;
  for (int k = 1; k < path.segments(); ++k) out.push_back(g.segment((k - 1) * n, n) / path.dt());
  return out;
}

inline double max_residual_norm(const std::vector<Vector>& residual) {
  double m = 0.0;
  for (const auto& r : residual) m = std::max(m, r.norm());
  return m;
}

// ---------------------------------------------------------------------------
// Noether charges

/// E = xdot^T D^{-1} xdot / 4 - f^T D^{-1} f / 4. Requires an autonomous system.
inline double energy(const SdeSystem& sys, const Vector& x, const Vector& xdot, double t) {
  if (!sys.autonomous)
    throw SymmetryNotApplicableError(sys.name + ": energy requires a time-independent Lagrangian");
  const Vector f = drift_eval(sys, x, t);
  const Matrix d = detail::symmetric_diffusion(noise_eval(sys, x, t));
  const auto llt = diffusion_factor(sys, x, t, d);
  return 0.25 * (xdot.dot(llt.solve(xdot)) - f.dot(llt.solve(f)));
}

/// p = D^{-1} (xdot - f) / 2.
inline Vector momentum(const SdeSystem& sys, const Vector& x, const Vector& xdot, double t) {
  return detail::evaluate_segment(sys, x, xdot, t).momentum;
}

inline Matrix angular_momentum_from(const Vector& x, const Vector& p) {
  return x * p.transpose() - p * x.transpose();
}

/// L = x p^T - p x^T, so L_ij = x_i p_j - x_j p_i.
inline Matrix angular_momentum(const SdeSystem& sys, const Vector& x, const Vector& xdot, double t) {
  if (sys.state_dim < 2) throw DimensionError(sys.name + ": angular momentum needs at least two dimensions");
  return angular_momentum_from(x, momentum(sys, x, xdot, t));
}

/// Per-segment charges along a path, evaluated at segment midpoints with the
/// same finite-difference velocities the action uses.
struct ChargeSeries {
  std::vector<double> times;
  std::optional<std::vector<double>> energy;  // autonomous systems only
  std::vector<Vector> momentum;
  std::vector<std::pair<int, int>> planes;          // (i, j), i < j, row-major
  std::vector<std::vector<double>> angular_momentum;  // one series per plane
  std::vector<SymmetrySpec> specs;
  std::vector<std::vector<double>> selected;  // one series per spec

  std::size_t size() const { return times.size(); }
};

/// The charge J associated with one symmetry at one segment.
inline double noether_charge(const SdeSystem& sys, const SymmetrySpec& spec, const SegmentState& seg) {
  switch (spec.kind) {
    case SymmetrySpec::Kind::TimeTranslation:
      return energy(sys, seg.x, seg.xdot, seg.t);
    case SymmetrySpec::Kind::Translation:
      return seg.momentum.dot(spec.direction);
    case SymmetrySpec::Kind::Rotation:
      return seg.x(spec.i) * seg.momentum(spec.j) - seg.x(spec.j) * seg.momentum(spec.i);
  }
  return 0.0;
}

inline ChargeSeries charge_series(const SdeSystem& sys, const DiscretizedPath& path,
                                  const std::vector<SymmetrySpec>& specs = {}) {
  const int n = sys.state_dim;
  for (const auto& spec : specs) {
    try {
      spec.validate(n);
    } catch (const ArgumentError& e) {
      throw SymmetryNotApplicableError(spec.describe() + ": " + e.what());
    }
    if (spec.kind == SymmetrySpec::Kind::TimeTranslation && !sys.autonomous)
      throw SymmetryNotApplicableError(spec.describe() + " not applicable: " + sys.name + " is not autonomous");
  }
  const auto segs = segment_states(sys, path);
  ChargeSeries cs;
  cs.specs = specs;
  cs.selected.assign(specs.size(), {});
  if (sys.autonomous) cs.energy.emplace();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) cs.planes.emplace_back(i, j);
  cs.angular_momentum.assign(cs.planes.size(), {});
  for (const auto& seg : segs) {
    cs.times.push_back(seg.t);
    if (cs.energy) cs.energy->push_back(energy(sys, seg.x, seg.xdot, seg.t));
    cs.momentum.push_back(seg.momentum);
    for (std::size_t q = 0; q < cs.planes.size(); ++q) {
      const auto [i, j] = cs.planes[q];
      cs.angular_momentum[q].push_back(seg.x(i) * seg.momentum(j) - seg.x(j) * seg.momentum(i));
    }
    for (std::size_t q = 0; q < specs.size(); ++q) cs.selected[q].push_back(noether_charge(sys, specs[q], seg));
  }
  return cs;
}

/// max_k |v_k - mean| / max(|mean|, floor): flatness of a charge trace.
inline double relative_variation(const std::vector<double>& v, double floor = 1e-300) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double dev = 0.0;
  for (double x : v) dev = std::max(dev, std::abs(x - mean));
  return dev / std::max(std::abs(mean), floor);
}

inline double max_abs_deviation(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double dev = 0.0;
  for (double x : v) dev = std::max(dev, std::abs(x - mean));
  return dev;
}

// ---------------------------------------------------------------------------
// Numeric symmetry check

struct PhaseSample {
  Vector x;
  Vector xdot;
  double t = 0;
};

struct SymmetryReport {
  SymmetrySpec spec;
  double max_deviation = 0;
  bool passed = false;
  std::string note;
};

inline constexpr double kSymmetryTolerance = 1e-10;

/// Applies the finite transformation of `spec` with parameter eps to each
/// sample and compares L before and after:
///   max |L' - L| / max(1, |L|) < tolerance.
/// Rotations act on both x and xdot. Never throws; failures to evaluate are
/// reported as a failed check.
inline SymmetryReport check_symmetry(const SdeSystem& sys, const SymmetrySpec& spec,
                                     const std::vector<PhaseSample>& samples, double eps = 1e-3,
                                     double tolerance = kSymmetryTolerance) {
  SymmetryReport rep{spec, 0.0, false, {}};
  try {
    spec.validate(sys.state_dim);
    for (const auto& s : samples) {
      Vector x = s.x;
      Vector v = s.xdot;
      double t = s.t;
      switch (spec.kind) {
        case SymmetrySpec::Kind::TimeTranslation:
          t += eps;
          break;
        case SymmetrySpec::Kind::Translation:
          x += eps * spec.direction;
          break;
        case SymmetrySpec::Kind::Rotation: {
          const double c = std::cos(eps);
          const double sn = std::sin(eps);
          const auto rotate = [&](Vector& y) {
            const double a = y(spec.i);
            const double b = y(spec.j);
            y(spec.i) = c * a - sn * b;
            y(spec.j) = sn * a + c * b;
          };
          rotate(x);
          rotate(v);
          break;
        }
      }
      const double l0 = lagrangian(sys, s.x, s.xdot, s.t);
      const double l1 = lagrangian(sys, x, v, t);
      rep.max_deviation = std::max(rep.max_deviation, std::abs(l1 - l0) / std::max(1.0, std::abs(l0)));
    }
    rep.passed = rep.max_deviation < tolerance;
  } catch (const std::exception& e) {
    rep.max_deviation = std::numeric_limits<double>::infinity();
    rep.passed = false;
    rep.note = e.what();
  }
  return rep;
}

}  // namespace mlpath
