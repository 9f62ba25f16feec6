#pragma once

#include <stdexcept>
#include <string>

namespace fractex {

// Error hierarchy. The CLI maps each family onto an exit code:
// UsageError -> 1, DataError -> 2, NumericError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad option or configuration value.
class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConditioningError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UnderdeterminedError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace fractex
