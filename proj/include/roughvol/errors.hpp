#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roughvol {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent input (shapes, grids, configs).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double error_estimate)
      : std::runtime_error(what), error_estimate_(error_estimate) {}
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Row-level problem in an option-chain file. `row` is 1-based and counts data
// rows only (the header is row 0).
class ChainFormatError : public std::runtime_error {
 public:
  ChainFormatError(const std::string& what, std::size_t row)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class PricingError : public std::runtime_error {
 public:
  PricingError(const std::string& what, std::size_t option_index)
      : std::runtime_error(what), option_index_(option_index) {}
  std::size_t option_index() const noexcept { return option_index_; }

 private:
  std::size_t option_index_;
};

}  // namespace roughvol
