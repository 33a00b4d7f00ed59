#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace binfair {

/// Malformed network or training configuration (dimension mismatch, bad option).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Request exceeds a fixed enumeration capacity (e.g. histogram width).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Metric is undefined on the given input (single class, empty cell, ...).
class UndefinedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an API contract (e.g. a trace from a different network).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Bad or inconsistent input data (CSV cells, missing columns, too few rows).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or infinity appeared in a layer's output.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}

  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

}  // namespace binfair
