#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpatt {

/// Base class for recoverable failures reported by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

class OffGridError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

/// Thrown when an iterative solve exhausts its iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residual_history)
      : Error(what), residual_history_(std::move(residual_history)) {}

  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

/// Programming error: a documented precondition was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace gpatt
