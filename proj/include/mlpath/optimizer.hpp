#pragma once

#include "mlpath/lagrangian.hpp"
#include "mlpath/parallel.hpp"
#include "mlpath/path.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mlpath {

struct OptimizerConfig {
  int max_iters = 10'000;
  double grad_tol = 1e-8;          // infinity norm of dS/dx
  double action_rel_tol = 1e-14;   // relative decrease over plateau_window iterations
  int plateau_window = 25;
  int memory = 12;                 // stored curvature pairs
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  bool fd_fallback = false;        // use finite-difference Jacobians when none is provided
  bool precondition = true;        // scale the initial inverse Hessian by the kinetic term

  void validate() const {
    if (max_iters < 1) throw ArgumentError("max_iters must be >= 1");
    if (!(grad_tol > 0.0)) throw ArgumentError("grad_tol must be positive");
    if (!(action_rel_tol > 0.0)) throw ArgumentError("action_rel_tol must be positive");
    if (plateau_window < 1) throw ArgumentError("plateau_window must be >= 1");
    if (memory < 1) throw ArgumentError("memory must be >= 1");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ArgumentError("armijo_c1 must lie in (0,1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ArgumentError("backtrack must lie in (0,1)");
  }

  JacobianSource jacobian_source() const { return fd_fallback ? JacobianSource::Auto : JacobianSource::Analytic; }
};

enum class Termination { GradientTolerance, ActionPlateau, MaxIterations, LineSearchFailed };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::GradientTolerance:
      return "grad_tol";
    case Termination::ActionPlateau:
      return "action_plateau";
    case Termination::MaxIterations:
      return "max_iters";
    case Termination::LineSearchFailed:
      return "line_search_failed";
  }
  return "unknown";
}

struct OptimizationReport {
  double action = 0;
  double grad_norm = 0;  // infinity norm
  int iterations = 0;
  bool converged = false;
  Termination termination = Termination::MaxIterations;
  double initial_action = 0;
};

struct OptimizationResult {
  DiscretizedPath path;
  OptimizationReport report;
};

namespace detail {

/// Block-tridiagonal Hessian of the kinetic part sum_k v_k^T D_k^{-1} v_k dt / 4
/// with respect to the interior nodes. Positive definite for fixed endpoints.
class KineticPreconditioner {
public:
  KineticPreconditioner(const SdeSystem& sys, const DiscretizedPath& path) {
    const int n = path.dim();
    const int K = path.segments();
    const int m = (K - 1) * n;
    std::vector<Matrix> w;
    w.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      const Vector x = path.midpoint(k);
      const double t = path.midpoint_time(k);
      const Matrix d = symmetric_diffusion(noise_eval(sys, x, t));
      w.push_back(0.5 * diffusion_factor(sys, x, t, d).solve(Matrix::Identity(n, n)) / path.dt());
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (int node = 1; node < K; ++node) {
      const int row = (node - 1) * n;
      const Matrix diag = w[static_cast<std::size_t>(node - 1)] + w[static_cast<std::size_t>(node)];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          trip.emplace_back(row + a, row + b, diag(a, b));
          if (node + 1 < K) {
            const double off = -w[static_cast<std::size_t>(node)](a, b);
            trip.emplace_back(row + a, row + n + b, off);
            trip.emplace_back(row + n + a, row + b, off);
          }
        }
    }
    Eigen::SparseMatrix<double> p(m, m);
    p.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(p);
    ok_ = solver_.info() == Eigen::Success;
  }

  bool ok() const { return ok_; }
  Vector apply_inverse(const Vector& g) const { return solver_.solve(g); }

private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool ok_ = false;
};

}  // namespace detail

/// Minimizes the discrete action over interior nodes with endpoints and
/// horizon fixed. L-BFGS with Armijo backtracking; steepest descent with a
/// Barzilai-Borwein step when the quasi-Newton direction is not a descent
/// direction. Trial points where D fails to factor shrink the step.
inline OptimizationResult minimize_action(const SdeSystem& sys, const DiscretizedPath& init,
                                          const OptimizerConfig& config = {}) {
  config.validate();
  if (init.dim() != sys.state_dim) throw DimensionError(sys.name + ": initial path dimension mismatch");
  const JacobianSource src = config.jacobian_source();

  std::optional<detail::KineticPreconditioner> precond;
  if (config.precondition) {
    precond.emplace(sys, init);
    if (!precond->ok()) precond.reset();
  }
  const auto apply_h0 = [&](const Vector& q) -> Vector { return precond ? precond->apply_inverse(q) : q; };

  Vector z = init.interior();
  auto eval = [&](const Vector& zz) { return action_with_gradient(sys, init.with_interior(zz), src); };
  auto cur = eval(z);

  OptimizationReport rep;
  rep.initial_action = cur.action;
  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> actions{cur.action};
  double bb_step = 0.0;
  int it = 0;
  bool done = false;

  while (!done) {
    const double gnorm = cur.gradient.size() ? cur.gradient.lpNorm<Eigen::Infinity>() : 0.0;
    if (gnorm <= config.grad_tol) {
      rep.termination = Termination::GradientTolerance;
      rep.converged = true;
      break;
    }
    if (it >= config.max_iters) {
      rep.termination = Termination::MaxIterations;
      break;
    }

    // Two-loop recursion with H0 = gamma P^{-1}.
    Vector q = cur.gradient;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    Vector r = apply_h0(q);
    if (!s_hist.empty()) {
      const Vector& y = y_hist.back();
      const double gamma = s_hist.back().dot(y) / y.dot(apply_h0(y));
      if (gamma > 0.0 && std::isfinite(gamma)) r *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(r);
      r += s_hist[i] * (alpha[i] - beta);
    }

    bool quasi_newton = true;
    Vector dir = -r;
    double slope = cur.gradient.dot(dir);
    if (!(slope < 0.0) || !dir.allFinite()) {
      quasi_newton = false;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    bool accepted = false;
    ActionAndGradient next;
    Vector z_next;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double step = 1.0;
      if (!quasi_newton) {
        dir = -cur.gradient;
        slope = -cur.gradient.squaredNorm();
        step = bb_step > 0.0 ? bb_step : 1.0 / std::max(1.0, gnorm);
      }
      for (int bt = 0; bt < config.max_backtracks; ++bt, step *= config.backtrack) {
        z_next = z + step * dir;
        try {
          next = eval(z_next);
        } catch (const PdViolationError&) {
          continue;
        } catch (const EvaluationDomainError&) {
          continue;
        }
        if (!std::isfinite(next.action)) continue;
        const double armijo = cur.action + config.armijo_c1 * step * slope;
        const bool sufficient = next.action <= armijo;
        // Near the optimum the Armijo decrease drops below roundoff in S;
        // accept a non-increasing step that reduces the gradient.
        const bool roundoff_ok = next.action <= cur.action &&
                                 std::abs(step * slope) <= 1e-12 * std::max(1.0, std::abs(cur.action)) &&
                                 next.gradient.lpNorm<Eigen::Infinity>() < gnorm;
        if (sufficient || roundoff_ok) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (!quasi_newton) break;
        quasi_newton = false;
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }
    }
    if (!accepted) {
      rep.termination = Termination::LineSearchFailed;
      break;
    }

    Vector s = z_next - z;
    Vector y = next.gradient - cur.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      bb_step = s.dot(s) / sy;
    } else {
      bb_step = 0.0;
    }
    z = std::move(z_next);
    cur = std::move(next);
    ++it;
    actions.push_back(cur.action);

    if (it >= config.plateau_window) {
      const double before = actions[actions.size() - 1 - static_cast<std::size_t>(config.plateau_window)];
      if (before - cur.action <= config.action_rel_tol * std::max(std::abs(cur.action), 1e-300)) {
        rep.termination = Termination::ActionPlateau;
        rep.converged = true;
        done = true;
      }
    }
  }

  rep.action = cur.action;
  rep.grad_norm = cur.gradient.size() ? cur.gradient.lpNorm<Eigen::Infinity>() : 0.0;
  rep.iterations = it;
  return {init.with_interior(z), rep};
}

/// Convenience overload: linear initial guess unless one is supplied.
inline OptimizationResult minimize_action(const SdeSystem& sys, const Vector& x0, const Vector& xf, double T, int K,
                                          const OptimizerConfig& config = {},
                                          const std::optional<DiscretizedPath>& init = std::nullopt,
                                          double t_start = 0.0) {
  if (x0.size() != sys.state_dim || xf.size() != sys.state_dim)
    throw DimensionError(sys.name + ": endpoint dimension mismatch");
  if (init) {
    if (init->segments() != K || (init->start() - x0).norm() != 0.0 || (init->end() - xf).norm() != 0.0 ||
        init->duration() != T)
      throw ArgumentError("initial path does not match the requested endpoints, horizon or K");
    return minimize_action(sys, *init, config);
  }
  return minimize_action(sys, init_path(x0, xf, T, K, LinearInit{}, t_start), config);
}

/// Linear upsampling onto a grid with factor times as many segments.
inline DiscretizedPath upsample(const DiscretizedPath& path, int factor) {
  if (factor < 2) throw ArgumentError("refinement factor must be >= 2");
  const int K = path.segments();
  std::vector<Vector> nodes;
  nodes.reserve(static_cast<std::size_t>(K * factor + 1));
  for (int k = 0; k < K; ++k)
    for (int r = 0; r < factor; ++r) {
      const double w = static_cast<double>(r) / factor;
      nodes.push_back((1.0 - w) * path.node(k) + w * path.node(k + 1));
    }
  nodes.push_back(path.end());
  nodes.front() = path.start();
  return DiscretizedPath(std::move(nodes), path.duration(), path.t_start());
}

/// Grid continuation: upsample then re-optimize.
inline OptimizationResult refine_path(const SdeSystem& sys, const DiscretizedPath& path, int factor,
                                      const OptimizerConfig& config = {}) {
  return minimize_action(sys, upsample(path, factor), config);
}

/// Runs the optimizer from every initial path and returns the distinct
/// minima sorted by action. Two results closer than `dedupe_tol` (max node
/// distance) count as the same minimum.
inline std::vector<OptimizationResult> multi_start(const SdeSystem& sys, const std::vector<DiscretizedPath>& inits,
                                                   const OptimizerConfig& config = {}, unsigned threads = 1,
                                                   double dedupe_tol = 1e-5) {
  std::vector<std::optional<OptimizationResult>> slots(inits.size());
  parallel_for(inits.size(), threads, [&](std::size_t i) { slots[i] = minimize_action(sys, inits[i], config); });
  std::vector<OptimizationResult> all;
  for (auto& s : slots) all.push_back(std::move(*s));
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.report.action < b.report.action; });
  std::vector<OptimizationResult> out;
  for (auto& r : all) {
    bool dup = false;
    for (const auto& o : out) {
      double dist = 0.0;
      for (int k = 0; k <= r.path.segments(); ++k)
        dist = std::max(dist, (r.path.node(k) - o.path.node(k)).norm());
      if (dist < dedupe_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(std::move(r));
  }
  return out;
}

/// Largest componentwise relative error between the analytic action
/// gradient and central finite differences with step rel_step*max(1,|z_i|).
/// Denominators are floored at 1e-8*max(1,|S|), the scale of finite-difference
/// roundoff, so vanishing gradients compare cleanly.
inline double grad_check(const SdeSystem& sys, const DiscretizedPath& path,
                         JacobianSource src = JacobianSource::Analytic, double rel_step = 1e-6) {
  const Vector g = action_gradient(sys, path, src);
  const double floor = 1e-8 * std::max(1.0, std::abs(action(sys, path)));
  Vector z = path.interior();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z(i);
    const double h = rel_step * std::max(1.0, std::abs(zi));
    z(i) = zi + h;
    const double sp = action(sys, path.with_interior(z));
    z(i) = zi - h;
    const double sm = action(sys, path.with_interior(z));
    z(i) = zi;
    const double fd = (sp - sm) / (2.0 * h);
    const double denom = std::max({std::abs(g(i)), std::abs(fd), floor});
    worst = std::max(worst, std::abs(g(i) - fd) / denom);
  }
  return worst;
}

}  // namespace mlpath
