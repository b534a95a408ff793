#pragma once

#include "mlpath/parallel.hpp"
#include "mlpath/sde_system.hpp"
#include "mlpath/trajectory.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>

namespace mlpath {

inline constexpr double kDefaultDivergenceBound = 1e6;

/// SplitMix64 finalizer applied to (master, index): the seed of trajectory
/// `index` depends only on those two numbers, never on which worker ran it.
inline std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

struct Grid {
  std::size_t steps;
  double dt;
};

inline Grid make_grid(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("time step must be positive");
  if (!(T >= dt * (1.0 - 1e-12))) throw ArgumentError("horizon must be at least one time step");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  return {std::max<std::size_t>(steps, 1), T / static_cast<double>(std::max<std::size_t>(steps, 1))};
}

/// Euler-Maruyama: x_{k+1} = x_k + f dt + G sqrt(dt) xi_k, Ito convention.
/// Calls observe(k, t_k, x_k) for every node including the first.
template <class Observer>
void integrate_em(const SdeSystem& sys, const Vector& x0, double t0, Grid grid, std::uint64_t seed, double bound,
                  Observer&& observe) {
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double sqdt = std::sqrt(grid.dt);
  Vector x = x0;
  Vector xi(sys.noise_dim);
  // Domain and shape checks once; the hot loop calls the maps directly and
  // relies on the norm guard to catch non-finite states.
  noise_eval(sys, x0, t0);
  drift_eval(sys, x0, t0);
  observe(std::size_t{0}, t0, x);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = t0 + static_cast<double>(k) * grid.dt;
    for (int m = 0; m < sys.noise_dim; ++m) xi(m) = sqdt * normal(rng);
    const Matrix g = sys.noise_map(x, t);
    const Vector f = sys.drift(x, t);
    x.noalias() += g.lazyProduct(xi);
    x += grid.dt * f;
    const double nrm = x.norm();
    if (!(nrm <= bound))
      throw DivergenceError(sys.name + ": state norm exceeded bound at step " + std::to_string(k + 1), k + 1);
    observe(k + 1, t0 + static_cast<double>(k + 1) * grid.dt, x);
  }
}

}  // namespace detail

/// One Euler-Maruyama trajectory over [t0, t0+T]. The step is adjusted to
/// T / round(T/dt) so the grid ends exactly at t0+T.
inline Trajectory euler_maruyama(const SdeSystem& sys, const Vector& x0, double t0, double T, double dt,
                                 std::uint64_t seed, double divergence_bound = kDefaultDivergenceBound) {
  if (!x0.allFinite()) throw ArgumentError("initial state must be finite");
  const auto grid = detail::make_grid(T, dt);
  Trajectory tr;
  tr.seed = seed;
  tr.times.reserve(grid.steps + 1);
  tr.states.reserve(grid.steps + 1);
  detail::integrate_em(sys, x0, t0, grid, seed, divergence_bound, [&](std::size_t, double t, const Vector& x) {
    tr.times.push_back(t);
    tr.states.push_back(x);
  });
  return tr;
}

struct EnsembleOptions {
  std::size_t n_paths = 981;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
  double divergence_bound = kDefaultDivergenceBound;
};

struct Ensemble {
  std::vector<Trajectory> trajectories;  // in index order, diverged ones removed
  std::vector<std::size_t> diverged;     // indices of runs that blew up
  std::size_t total = 0;
};

/// Independent trajectories; trajectory i uses trajectory_seed(seed, i).
inline Ensemble simulate_ensemble(const SdeSystem& sys, const Vector& x0, double t0, double T,
                                  const EnsembleOptions& opts) {
  std::vector<std::optional<Trajectory>> slots(opts.n_paths);
  parallel_for(opts.n_paths, opts.threads, [&](std::size_t i) {
    try {
      slots[i] = euler_maruyama(sys, x0, t0, T, opts.dt, trajectory_seed(opts.seed, i), opts.divergence_bound);
    } catch (const DivergenceError&) {
      slots[i].reset();
    }
  });
  Ensemble out;
  out.total = opts.n_paths;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i])
      out.trajectories.push_back(std::move(*slots[i]));
    else
      out.diverged.push_back(i);
  }
  return out;
}

/// Final states only; avoids storing full paths for large moment checks.
/// Entry i is empty when run i diverged.
inline std::vector<std::optional<Vector>> ensemble_endpoints(const SdeSystem& sys, const Vector& x0, double t0,
                                                             double T, const EnsembleOptions& opts) {
  const auto grid = detail::make_grid(T, opts.dt);
  std::vector<std::optional<Vector>> out(opts.n_paths);
  parallel_for(opts.n_paths, opts.threads, [&](std::size_t i) {
    Vector last;
    try {
      detail::integrate_em(sys, x0, t0, grid, trajectory_seed(opts.seed, i), opts.divergence_bound,
                           [&](std::size_t k, double, const Vector& x) {
                             if (k == grid.steps) last = x;
                           });
      out[i] = std::move(last);
    } catch (const DivergenceError&) {
      out[i].reset();
    }
  });
  return out;
}

/// Cuts a 1D trajectory at the first node lying on or beyond either
/// boundary. The crossing node is kept. Returns nullopt if no crossing.
inline std::optional<Trajectory> truncate_at_first_passage(const Trajectory& tr, double lower, double upper) {
  if (tr.dim() != 1) throw DimensionError("first-passage truncation requires a 1D trajectory");
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double x = tr.states[k](0);
    if (x <= lower || x >= upper) {
      Trajectory cut;
      cut.seed = tr.seed;
      cut.times.assign(tr.times.begin(), tr.times.begin() + static_cast<std::ptrdiff_t>(k + 1));
      cut.states.assign(tr.states.begin(), tr.states.begin() + static_cast<std::ptrdiff_t>(k + 1));
      return cut;
    }
  }
  return std::nullopt;
}

/// Absorbing boundaries for 1D bounded systems, applied post hoc.
struct FirstPassage {
  double lower = -1.0;
  double upper = 1.0;
  double tol_t = 0.05;  // accepted window around T for the hitting time
};

struct BridgeCriteria {
  Vector xf;
  double T = 1.0;  // measured from the trajectory start
  double tol = std::numeric_limits<double>::infinity();
  std::optional<FirstPassage> first_passage;
};

/// Keeps trajectories that start at x0 and are within tol of xf at time T.
/// In first-passage mode, trajectories are truncated at their first boundary
/// hit and kept when the hit boundary is within tol of xf and the hit time is
/// within tol_t of T.
inline std::vector<Trajectory> ensemble_bridge_filter(const std::vector<Trajectory>& trajectories, const Vector& x0,
                                                      const BridgeCriteria& crit) {
  std::vector<Trajectory> kept;
  for (const auto& tr : trajectories) {
    if (tr.size() < 2) throw ArgumentError("bridge filter: trajectory too short");
    if ((tr.states.front() - x0).norm() > 1e-9 * (1.0 + x0.norm()))
      throw ArgumentError("bridge filter: trajectory does not start at x0");
    if (crit.xf.size() != tr.dim()) throw DimensionError("bridge filter: xf dimension mismatch");
    if (crit.first_passage) {
      const auto& fp = *crit.first_passage;
      auto cut = truncate_at_first_passage(tr, fp.lower, fp.upper);
      if (!cut) continue;
      const double hit_state = cut->states.back()(0);
      const double boundary = hit_state <= fp.lower ? fp.lower : fp.upper;
      const double hit_time = cut->times.back() - cut->times.front();
      if (std::abs(boundary - crit.xf(0)) <= crit.tol && std::abs(hit_time - crit.T) <= fp.tol_t)
        kept.push_back(std::move(*cut));
      continue;
    }
    const double h = tr.times[1] - tr.times[0];
    const double target = tr.times.front() + crit.T;
    const double pos = (target - tr.times.front()) / h;
    const auto k = static_cast<std::ptrdiff_t>(std::llround(pos));
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(tr.size()) || std::abs(pos - static_cast<double>(k)) > 1e-6)
      throw ArgumentError("bridge filter: time T is not a node of the trajectory grid");
    if ((tr.states[static_cast<std::size_t>(k)] - crit.xf).norm() <= crit.tol) kept.push_back(tr);
  }
  return kept;
}

}  // namespace mlpath
