#pragma once

#include "mlpath/lagrangian.hpp"
#include "mlpath/parallel.hpp"
#include "mlpath/sde_system.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace mlpath {

struct FixedPoint {
  Vector point;
  bool stable = false;
  bool degenerate = false;
  Vector eigenvalue_real;  // real parts of the drift Jacobian spectrum
};

struct FixedPointSearch {
  Vector lower;            // box corner
  Vector upper;            // box corner
  int seeds_per_axis = 21;
  double tol = 1e-12;      // residual norm accepted as a root
  double dedupe = 1e-6;    // roots closer than this are merged
  int max_newton = 100;
  unsigned threads = 1;
};

namespace detail {

inline std::optional<Vector> newton_root(const SdeSystem& sys, Vector x, const FixedPointSearch& opts) {
  const Vector span = opts.upper - opts.lower;
  for (int it = 0; it < opts.max_newton; ++it) {
    Vector f;
    try {
      f = drift_eval(sys, x, 0.0);
    } catch (const EvaluationDomainError&) {
      return std::nullopt;
    }
    if (f.norm() < opts.tol) return x;
    const Matrix jac = drift_jacobian(sys, x, 0.0, JacobianSource::Auto);
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) return std::nullopt;
    x -= lu.solve(f);
    if (!x.allFinite()) return std::nullopt;
    // wandered far outside the search box
    if (((x - opts.lower).array() < -span.array()).any() || ((x - opts.upper).array() > span.array()).any())
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

/// Zeros of the drift of an autonomous system, found by Newton iteration from
/// a uniform grid of seeds in the box. Results are deduplicated, restricted
/// to the box, and sorted lexicographically. Seeds that fail to converge are
/// skipped.
inline std::vector<FixedPoint> find_fixed_points(const SdeSystem& sys, const FixedPointSearch& opts) {
  if (!sys.autonomous) throw ArgumentError(sys.name + ": fixed points need an autonomous system");
  const int n = sys.state_dim;
  if (opts.lower.size() != n || opts.upper.size() != n) throw DimensionError("search box dimension mismatch");
  if (opts.seeds_per_axis < 1) throw ArgumentError("seeds_per_axis must be >= 1");
  std::size_t total = 1;
  for (int c = 0; c < n; ++c) total *= static_cast<std::size_t>(opts.seeds_per_axis);

  std::vector<std::optional<Vector>> roots(total);
  parallel_for(total, opts.threads, [&](std::size_t idx) {
    Vector seed(n);
    std::size_t rem = idx;
    for (int c = 0; c < n; ++c) {
      const auto g = static_cast<std::size_t>(opts.seeds_per_axis);
      const double w = opts.seeds_per_axis == 1 ? 0.5 : static_cast<double>(rem % g) / (opts.seeds_per_axis - 1);
      rem /= g;
      seed(c) = opts.lower(c) + w * (opts.upper(c) - opts.lower(c));
    }
    roots[idx] = detail::newton_root(sys, seed, opts);
  });

  std::vector<Vector> unique;
  for (const auto& r : roots) {
    if (!r) continue;
    const Vector& x = *r;
    const double slack = 1e-9;
    if (((x - opts.lower).array() < -slack).any() || ((x - opts.upper).array() > slack).any()) continue;
    bool dup = false;
    for (const auto& u : unique)
      if ((u - x).norm() < opts.dedupe) {
        dup = true;
        break;
      }
    if (!dup) unique.push_back(x);
  }
  std::sort(unique.begin(), unique.end(), [](const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });

  std::vector<FixedPoint> out;
  for (const auto& x : unique) {
    FixedPoint fp;
    fp.point = x;
    const Matrix jac = detail::drift_jacobian(sys, x, 0.0, JacobianSource::Auto);
    Eigen::JacobiSVD<Matrix> svd(jac);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    fp.degenerate = smin <= 1e-10 * std::max(1.0, smax);
    Eigen::EigenSolver<Matrix> es(jac, false);
    fp.eigenvalue_real = es.eigenvalues().real();
    fp.stable = !fp.degenerate && (fp.eigenvalue_real.array() < 0.0).all();
    out.push_back(std::move(fp));
  }
  return out;
}

inline std::vector<FixedPoint> stable_only(const std::vector<FixedPoint>& fps) {
  std::vector<FixedPoint> out;
  std::copy_if(fps.begin(), fps.end(), std::back_inserter(out), [](const FixedPoint& f) { return f.stable; });
  return out;
}

}  // namespace mlpath
