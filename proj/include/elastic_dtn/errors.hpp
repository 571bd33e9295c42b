#pragma once

#include <stdexcept>
#include <string>

namespace elastic_dtn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inadmissible input (bad keys, missing levels, Lamé
/// coefficients violating mu > 0, lambda + mu >= 0, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Jets from different charts were combined in one expression.
class ContextMismatch : public InputError {
 public:
  ContextMismatch() : InputError("jet context mismatch") {}
};

/// A required symbol level is absent from the observed data.
class MissingLevel : public InputError {
 public:
  explicit MissingLevel(int degree)
      : InputError("missing symbol level " + std::to_string(degree)), degree_(degree) {}
  int degree() const { return degree_; }

 private:
  int degree_;
};

/// A computation needed more trusted Taylor degrees than the jet carries.
class AccuracyExhausted : public Error {
 public:
  using Error::Error;
};

/// Division by, or square root of, a jet with a degenerate constant term.
class NotInvertible : public Error {
 public:
  using Error::Error;
};

/// Observed data is inconsistent with the model (non-quadratic forms,
/// imaginary residue).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace elastic_dtn
