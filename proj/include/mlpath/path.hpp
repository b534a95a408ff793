#pragma once

#include "mlpath/trajectory.hpp"
#include "mlpath/types.hpp"

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

namespace mlpath {

/// Uniformly gridded path with fixed endpoints: nodes x_0..x_K at
/// t_k = t_start + k T / K. Only interior nodes are free.
class DiscretizedPath {
public:
  DiscretizedPath(std::vector<Vector> nodes, double T, double t_start = 0.0)
      : nodes_(std::move(nodes)), T_(T), t_start_(t_start) {
    if (nodes_.size() < 3) throw ArgumentError("path needs K >= 2 segments");
    if (!(T_ > 0.0) || !std::isfinite(T_)) throw ArgumentError("path duration must be positive");
    const auto n = nodes_.front().size();
    if (n < 1) throw ArgumentError("path state dimension must be positive");
    for (const auto& x : nodes_) {
      if (x.size() != n) throw DimensionError("path nodes have inconsistent dimensions");
      if (!x.allFinite()) throw ArgumentError("path nodes must be finite");
    }
  }

  int dim() const { return static_cast<int>(nodes_.front().size()); }
  int segments() const { return static_cast<int>(nodes_.size()) - 1; }
  double duration() const { return T_; }
  double t_start() const { return t_start_; }
  double dt() const { return T_ / segments(); }
  double time(int k) const { return t_start_ + T_ * static_cast<double>(k) / segments(); }
  double midpoint_time(int k) const { return t_start_ + T_ * (static_cast<double>(k) + 0.5) / segments(); }

  const Vector& node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
  const std::vector<Vector>& nodes() const { return nodes_; }
  const Vector& start() const { return nodes_.front(); }
  const Vector& end() const { return nodes_.back(); }

  Vector midpoint(int k) const { return 0.5 * (node(k) + node(k + 1)); }
  Vector velocity(int k) const { return (node(k + 1) - node(k)) / dt(); }

  /// Interior nodes x_1..x_{K-1} stacked into one vector of length (K-1) N.
  Vector interior() const {
    const int n = dim();
    Vector z((segments() - 1) * n);
    for (int k = 1; k < segments(); ++k) z.segment((k - 1) * n, n) = node(k);
    return z;
  }

  /// Copy with the interior replaced; endpoints are carried over untouched.
  DiscretizedPath with_interior(const Vector& z) const {
    const int n = dim();
    if (z.size() != (segments() - 1) * n) throw DimensionError("interior vector has wrong length");
    DiscretizedPath out = *this;
    for (int k = 1; k < segments(); ++k) out.nodes_[static_cast<std::size_t>(k)] = z.segment((k - 1) * n, n);
    return out;
  }

  Trajectory to_trajectory() const {
    Trajectory tr;
    for (int k = 0; k <= segments(); ++k) {
      tr.times.push_back(time(k));
      tr.states.push_back(node(k));
    }
    return tr;
  }

private:
  std::vector<Vector> nodes_;
  double T_;
  double t_start_;
};

struct LinearInit {};
struct FromTrajectory {
  Trajectory trajectory;
  double tol = 1e-6;  // allowed horizon mismatch, absolute
};
using InitStrategy = std::variant<LinearInit, FromTrajectory>;

namespace detail {

inline Vector interpolate(const Trajectory& tr, double t) {
  const auto& ts = tr.times;
  if (t <= ts.front()) return tr.states.front();
  if (t >= ts.back()) return tr.states.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const auto hi = static_cast<std::size_t>(it - ts.begin());
  const auto lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return (1.0 - w) * tr.states[lo] + w * tr.states[hi];
}

}  // namespace detail

/// Initial guess for path optimization. The trajectory strategy resamples a
/// (possibly truncated) simulated bridge by linear interpolation in time; its
/// span must match T within `tol`. Endpoints are always set to x0 and xf.
inline DiscretizedPath init_path(const Vector& x0, const Vector& xf, double T, int K,
                                 const InitStrategy& strategy = LinearInit{}, double t_start = 0.0) {
  if (K < 2) throw ArgumentError("K must be at least 2");
  if (!(T > 0.0)) throw ArgumentError("T must be positive");
  if (x0.size() != xf.size()) throw DimensionError("x0 and xf have different dimensions");
  std::vector<Vector> nodes(static_cast<std::size_t>(K) + 1);
  if (std::holds_alternative<LinearInit>(strategy)) {
    for (int k = 0; k <= K; ++k) {
      const double w = static_cast<double>(k) / K;
      nodes[static_cast<std::size_t>(k)] = (1.0 - w) * x0 + w * xf;
    }
  } else {
    const auto& src = std::get<FromTrajectory>(strategy);
    const auto& tr = src.trajectory;
    if (tr.size() < 2) throw ResamplingError("source trajectory has fewer than two nodes");
    if (tr.dim() != x0.size()) throw ResamplingError("source trajectory dimension mismatch");
    const double span = tr.t_end() - tr.t0();
    if (std::abs(span - T) > src.tol)
      throw ResamplingError("source trajectory spans " + format_double(span) + ", expected " + format_double(T));
    for (int k = 0; k <= K; ++k)
      nodes[static_cast<std::size_t>(k)] = detail::interpolate(tr, tr.t0() + span * static_cast<double>(k) / K);
  }
  nodes.front() = x0;
  nodes.back() = xf;
  return DiscretizedPath(std::move(nodes), T, t_start);
}

}  // namespace mlpath
