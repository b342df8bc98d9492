#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace logicmp {

// Malformed or inconsistent input data (rule files, evidence, tensor shapes).
// The CLI maps this family to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : DataError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Brute-force reference refused an instance that exceeds its configured size.
class LimitExceeded : public DataError {
 public:
  using DataError::DataError;
};

// Inference produced a non-finite logit.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t iteration, const std::string& message)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + message), iteration_(iteration) {}

  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace logicmp
