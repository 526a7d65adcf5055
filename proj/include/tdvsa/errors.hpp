#pragma once

#include <stdexcept>

namespace tdvsa {

/// A network or scenario violates a structural invariant (bad ids, zero
/// impedance, disconnected island, schema problem, ...).
class ModelError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The base case (lambda = 0) has no power-flow solution.
class InfeasibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Continuation stopped before reaching a turning point.
class StallError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace tdvsa
