#pragma once

#include <stdexcept>
#include <string>

namespace kme {

// Invalid argument values (domain violations of an operation's inputs).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A valid input that the closed forms do not cover, e.g. unequal variances.
class UnsupportedCaseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A mathematical hypothesis of the requested quantity does not hold.
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double estimate, double error_estimate)
      : std::runtime_error(what), estimate_(estimate), error_estimate_(error_estimate) {}
  double estimate() const { return estimate_; }
  double error_estimate() const { return error_estimate_; }

 private:
  double estimate_;
  double error_estimate_;
};

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical result contradicts an invariant by more than rounding can explain.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace kme
