#pragma once

#include <stdexcept>
#include <string>

namespace cdt {

// Bad input: spec fields, config files, CLI arguments. Maps to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Results that fail a numerical sanity bound (unitarity, eigen residual, ...).
// Maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Norm drift beyond the integration bound; carries the time of the bad step.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, double time)
      : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace cdt
