#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "jagged/numerics.hpp"

namespace jagged {

// Caller violated a precondition (bad dimensions, infeasible policy, bad config).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation is not supported for this objective/capability family.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Verifier could not produce an estimate (e.g. no eligible steps).
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A training run produced a non-finite gradient or parameter.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step, Vector theta)
      : std::runtime_error(what), step_(step), theta_(std::move(theta)) {}

  std::size_t step() const noexcept { return step_; }
  const Vector& theta() const noexcept { return theta_; }

 private:
  std::size_t step_;
  Vector theta_;
};

// Iterative governance control ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Vector last_iterate, Vector last_shares)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        last_shares_(std::move(last_shares)) {}

  const Vector& last_iterate() const noexcept { return last_iterate_; }
  const Vector& last_shares() const noexcept { return last_shares_; }

 private:
  Vector last_iterate_;
  Vector last_shares_;
};

}  // namespace jagged
