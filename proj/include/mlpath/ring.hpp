#pragma once

#include "mlpath/types.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <cmath>
#include <numbers>

namespace mlpath {

/// Gaussian blurred ring of radius R, further corrupted by the forward
/// process dx = sqrt(2t) dW up to time t: variance sigma0^2 + t^2.
struct RingParams {
  double R = 1.0;
  double sigma0 = 0.2;
  double T = 1.0;      // diffusion horizon
  double t_min = 0.01; // reverse-time clamp, default 0.01 T

  void validate() const {
    if (!(R > 0.0)) throw ArgumentError("ring: R must be positive");
    if (!(sigma0 > 0.0)) throw ArgumentError("ring: sigma0 must be positive");
    if (!(t_min > 0.0 && t_min < T)) throw ArgumentError("ring: need 0 < t_min < T");
  }

  double variance(double t) const { return sigma0 * sigma0 + t * t; }
};

/// e^{-z} I0(z) and e^{-z} I1(z); finite for all z >= 0.
inline double bessel_i0_scaled(double z) {
  gsl_sf_result r;
  if (gsl_sf_bessel_I0_scaled_e(z, &r) != GSL_SUCCESS) throw EvaluationDomainError("I0 scaled evaluation failed", 0);
  return r.val;
}

inline double bessel_i1_scaled(double z) {
  gsl_sf_result r;
  if (gsl_sf_bessel_I1_scaled_e(z, &r) != GSL_SUCCESS) throw EvaluationDomainError("I1 scaled evaluation failed", 0);
  return r.val;
}

/// log I0(z) = z + log(e^{-z} I0(z)).
inline double log_bessel_i0(double z) { return std::abs(z) + std::log(bessel_i0_scaled(std::abs(z))); }

/// I1(z) / I0(z) for z >= 0 as a ratio of scaled functions.
inline double bessel_ratio(double z) {
  if (z == 0.0) return 0.0;
  return bessel_i1_scaled(z) / bessel_i0_scaled(z);
}

/// log p(x | t) of the noise-corrupted ring density (normalized).
inline double ring_log_density(const Vector& x, double t, const RingParams& p) {
  if (x.size() != 2) throw DimensionError("ring density is defined on the plane");
  const double v = p.variance(t);
  const double r = x.norm();
  return -(r * r + p.R * p.R) / (2.0 * v) + log_bessel_i0(p.R * r / v) - std::log(2.0 * std::numbers::pi * v);
}

/// Score s = grad_x log p = (R rho(z) / |x| - 1) x / v, z = R |x| / v,
/// rho = I1/I0. Zero at the origin.
inline Vector ring_score(const Vector& x, double t, const RingParams& p) {
  if (x.size() != 2) throw DimensionError("ring score is defined on the plane");
  const double v = p.variance(t);
  const double r = x.norm();
  if (r == 0.0) return Vector::Zero(2);
  const double z = p.R * r / v;
  return (p.R * bessel_ratio(z) / r - 1.0) * x / v;
}

/// d s / d x, symmetric 2x2.
inline Matrix ring_score_jacobian(const Vector& x, double t, const RingParams& p) {
  const double v = p.variance(t);
  const double a = p.R / v;
  const double r = x.norm();
  const double z = a * r;
  double g;        // radial factor: s = g(r) x / v
  double dg_over_r;  // g'(r) / r
  if (z < 1e-3) {
    // rho(z) = z/2 - z^3/16 + z^5/96 - ...
    g = p.R * a / 2.0 - p.R * a * a * a * r * r / 16.0 - 1.0;
    dg_over_r = -p.R * a * a * a / 8.0 + p.R * std::pow(a, 5) * r * r / 24.0;
  } else {
    const double rho = bessel_ratio(z);
    const double drho = 1.0 - rho / z - rho * rho;
    g = p.R * rho / r - 1.0;
    dg_over_r = p.R * (drho * a * r - rho) / (r * r * r);
  }
  return (g * Matrix::Identity(2, 2) + dg_over_r * x * x.transpose()) / v;
}

}  // namespace mlpath
