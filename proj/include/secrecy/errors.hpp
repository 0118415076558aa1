#pragma once

#include <stdexcept>
#include <string>

namespace secrecy {

// Invalid argument outside a function's mathematical domain (x <= 0 for Gamma, etc.).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A request exceeding a configured size cap (partition order, point counts).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a caller asks a single-branch formula for the other branch.
class BranchError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The PU outage target cannot be met for any positive SU transmit power.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CancelledError : public std::runtime_error {
 public:
  CancelledError() : std::runtime_error("evaluation cancelled") {}
};

// Adaptive quadrature ran out of subdivisions. Carries the best estimate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

// An alternating or compensated sum left the admissible probability range.
class CancellationError : public std::runtime_error {
 public:
  CancellationError(const std::string& what, int order)
      : std::runtime_error(what), order_(order) {}
  int order() const noexcept { return order_; }

 private:
  int order_;
};

}  // namespace secrecy
