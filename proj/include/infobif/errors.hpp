#pragma once

#include <stdexcept>
#include <string>

namespace infobif {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of p, q, or a supplied matrix do not agree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (bad schedule, non-stochastic q, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped before reaching its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// The requested information level cannot be reached with N classes.
class InfeasibleI0 : public Error {
 public:
  using Error::Error;
};

/// The constraint gradient is numerically zero, so the constrained kernel
/// has the same dimension as the normalization kernel.
class DegenerateKernel : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Not enough points on a smooth curve segment for the derivative stencil.
class SegmentTooShort : public Error {
 public:
  using Error::Error;
};

}  // namespace infobif
