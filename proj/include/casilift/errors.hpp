#pragma once

#include <stdexcept>
#include <string>

namespace casilift {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// A Drude material was asked for eps(i*0); use static_limit() instead.
struct StaticMetalError : DomainError {
  using DomainError::DomainError;
};

/// Invalid material library or run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Quadrature or series failed to converge. Carries the residual reached.
struct NumericalFailure : Error {
  NumericalFailure(const std::string& what, double residual_)
      : Error(what + " (residual " + std::to_string(residual_) + ")"), residual(residual_) {}
  double residual;
};

}  // namespace casilift
