#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlpath {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A drift or noise map produced a non-finite value, or was queried outside
/// its valid time range.
class EvaluationDomainError : public Error {
public:
  EvaluationDomainError(const std::string& what, int component)
      : Error(what), component_(component) {}
  int component() const noexcept { return component_; }

private:
  int component_;
};

/// The diffusion tensor D = G G^T / 2 failed its Cholesky factorization.
class PdViolationError : public Error {
public:
  PdViolationError(const std::string& what, Vector x, double t, int pivot)
      : Error(what), x_(std::move(x)), t_(t), pivot_(pivot) {}
  const Vector& x() const noexcept { return x_; }
  double t() const noexcept { return t_; }
  int pivot() const noexcept { return pivot_; }

private:
  Vector x_;
  double t_;
  int pivot_;
};

/// Simulated state exceeded the configured norm bound.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

class ConfigurationError : public Error {
public:
  using Error::Error;
};

class SymmetryNotApplicableError : public Error {
public:
  using Error::Error;
};

class InadmissibleEnergyError : public Error {
public:
  InadmissibleEnergyError(const std::string& what, double x) : Error(what), x_(x) {}
  double x() const noexcept { return x_; }

private:
  double x_;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class ArgumentError : public Error {
public:
  using Error::Error;
};

class ResamplingError : public Error {
public:
  using Error::Error;
};

class OptimizationError : public Error {
public:
  using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace mlpath
