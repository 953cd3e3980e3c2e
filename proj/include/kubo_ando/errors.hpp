#pragma once

#include <stdexcept>
#include <string>

namespace kubo_ando {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent arguments: dimension mismatch, non-finite
// entries, wrong positivity class, zero projection.
class InputError : public Error {
 public:
  using Error::Error;
};

// A scalar function was asked for a value outside where it is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An interval endpoint sits on (or within 1e-8 of) an eigenvalue.
class BoundaryAmbiguityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// An iterative limit did not settle within its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Two representations that must agree (a function and its measure) do not.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

// The witness grid was exhausted. Carries the scan table for diagnosis.
class SearchFailureError : public Error {
 public:
  SearchFailureError(const std::string& what, std::string table)
      : Error(what), table_(std::move(table)) {}
  const std::string& table() const noexcept { return table_; }

 private:
  std::string table_;
};

// The two sides of the order-determination equivalence disagreed. Since the
// equivalence is a theorem this always points at a numerical problem.
class TheoremViolationError : public Error {
 public:
  TheoremViolationError(const std::string& what, std::string diagnostic)
      : Error(what), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const noexcept { return diagnostic_; }

 private:
  std::string diagnostic_;
};

}  // namespace kubo_ando
