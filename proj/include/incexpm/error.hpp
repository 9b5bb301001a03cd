#pragma once

#include <stdexcept>
#include <string>

namespace incexpm {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operand shapes do not fit together.
struct DimensionError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

/// A generator spec maps some monomial to a polynomial of higher degree.
struct StructureError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

struct OutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A factorization hit a zero pivot, or a pivot small enough that the
/// result cannot be trusted. Carries the offending magnitude.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  double pivot() const { return pivot_; }

 private:
  double pivot_;
};

/// Internal cache bookkeeping went out of sync.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

}  // namespace incexpm
