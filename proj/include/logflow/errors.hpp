#pragma once

#include <stdexcept>
#include <string>

namespace logflow {

// Base class for all numerical failures raised by the library.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A principal radius dropped below the convexity floor.
class NonConvex : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidPoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonMonotone : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BracketFailure : public NumericalError {
 public:
  BracketFailure(const std::string& what, std::string sweep_log)
      : NumericalError(what), sweep_log_(std::move(sweep_log)) {}
  const std::string& sweep_log() const { return sweep_log_; }

 private:
  std::string sweep_log_;
};

class InsufficientWindow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Invalid user configuration; carries the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace logflow
