#pragma once

#include <stdexcept>
#include <string>

namespace hmmee {

// Base for every error raised by the library. The CLI maps the subclasses
// onto exit codes (usage 2, data 3, numerical 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// θ-vector length does not match the model template.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A signal parameter lies outside its family's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A density or score was requested where the density vanishes.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Malformed input to an operation (short sequences, bad derivative matrices, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Data files that cannot be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Missing or inconsistent configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The 2-D Fisher information is (numerically) singular.
class SingularInformationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hmmee
