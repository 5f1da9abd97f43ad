#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtdft {

/// Invalid or inconsistent run configuration. Messages carry the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields that must share a grid do not.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A density left its admissible band (0 < rho_floor <= rho <= rho_bar - rho_floor).
class BandViolation : public std::domain_error {
 public:
  BandViolation(std::size_t index, double value, const std::string& what)
      : std::domain_error(what), index_(index), value_(value) {}
  std::size_t index() const { return index_; }
  double value() const { return value_; }

 private:
  std::size_t index_;
  double value_;
};

/// An integrator gave up (step-size underflow, step budget, non-convergence).
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

}  // namespace dtdft
