#pragma once

#include "mlpath/sde_system.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>

namespace mlpath {

class QuadratureError : public Error {
public:
  using Error::Error;
};

struct SimpsonOptions {
  double abs_tol = 1e-10;
  std::size_t max_evaluations = 1'000'000;
  int max_depth = 60;
};

namespace detail {

struct SimpsonState {
  const std::function<double(double)>& f;
  const SimpsonOptions& opts;
  std::size_t evaluations = 0;

  double eval(double x) {
    if (++evaluations > opts.max_evaluations)
      throw QuadratureError("adaptive Simpson exceeded " + std::to_string(opts.max_evaluations) + " evaluations");
    return f(x);
  }

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= opts.max_depth || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace detail

/// Adaptive Simpson quadrature with interval bisection and Richardson
/// correction.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               const SimpsonOptions& opts = {}) {
  detail::SimpsonState st{f, opts};
  const double fa = st.eval(a);
  const double fb = st.eval(b);
  const double fm = st.eval(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return st.recurse(a, b, fa, fm, fb, whole, opts.abs_tol, 0);
}

/// Transit time of a 1D most-likely path with energy E between x0 and xf:
///   t* = integral dx / sqrt(f(x)^2 + 4 D(x) E)
/// taken along the oriented interval, so the result is positive for either
/// direction of travel.
inline double transition_time_1d(const SdeSystem& sys, double x0, double xf, double E,
                                 const SimpsonOptions& opts = {}) {
  if (sys.state_dim != 1) throw DimensionError(sys.name + ": transition time needs a 1D system");
  if (!sys.autonomous) throw SymmetryNotApplicableError(sys.name + ": transition time needs an autonomous system");
  if (x0 == xf) throw ArgumentError("transition time: x0 and xf coincide");
  const double t = 0.0;
  Vector xv(1);
  const auto speed_sq = [&](double x) {
    xv(0) = x;
    const double f = drift_eval(sys, xv, t)(0);
    const double d = diffusion_eval(sys, xv, t)(0, 0);
    return f * f + 4.0 * d * E;
  };
  const auto inadmissible = [&](double x, double s2) {
    std::ostringstream os;
    os.precision(17);
    os << "energy " << E << " inadmissible: f^2 + 4DE = " << s2 << " at x = " << x;
    return InadmissibleEnergyError(os.str(), x);
  };
  // Coarse scan first so a zero crossing between quadrature nodes is caught.
  constexpr int kScan = 1000;
  for (int i = 0; i <= kScan; ++i) {
    const double x = x0 + (xf - x0) * static_cast<double>(i) / kScan;
    const double s2 = speed_sq(x);
    if (!(s2 > 0.0)) throw inadmissible(x, s2);
  }
  const std::function<double(double)> integrand = [&](double x) {
    const double s2 = speed_sq(x);
    if (!(s2 > 0.0)) throw inadmissible(x, s2);
    return 1.0 / std::sqrt(s2);
  };
  return std::abs(adaptive_simpson(integrand, x0, xf, opts));
}

}  // namespace mlpath
