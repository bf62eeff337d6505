#pragma once

#include <stdexcept>
#include <string>

namespace relaybf {

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Linear system or covariance matrix too close to singular to trust.
struct IllConditionedError : std::runtime_error {
  IllConditionedError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition(condition_estimate) {}
  double condition;
};

struct NumericFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Power-control fixed point does not exist (spectral radius >= 1).
struct InfeasibleAllocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance violates a structural requirement of the scheme (e.g. rank
// deficiency of the first hop).
struct UnsupportedInstanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace relaybf
