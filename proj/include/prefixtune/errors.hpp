#pragma once

#include <stdexcept>
#include <string>

namespace prefixtune {

// Base of every error raised by the library. The CLI maps the subclasses
// onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedRadixError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class PlanError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SizeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

class NoFeasibleConfigError : public Error {
 public:
  using Error::Error;
};

class UntrainableModelError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace prefixtune
