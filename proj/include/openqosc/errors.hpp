#pragma once

#include <stdexcept>
#include <string>

namespace openqosc {

/// Argument outside the mathematical domain of an operation (negative
/// frequency, non-positive time step, s <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration (grid, run config, sweep).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A truncated series whose last retained term is not negligible.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double achieved_bound)
      : std::runtime_error(what), bound_(achieved_bound) {}
  double achieved_bound() const noexcept { return bound_; }

 private:
  double bound_;
};

/// Closed forms that divide by frequency differences hit a coincidence.
class DegenerateSpectrumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigensolver or other numerical kernel failed to converge.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace openqosc
