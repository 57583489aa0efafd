#pragma once

#include <stdexcept>
#include <string>

namespace ids {

// Exception hierarchy. The CLI maps each family onto an exit code.

/// Invalid input data: out-of-range coordinates, malformed files, corrupt state.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value outside its quantizer's range.
class RangeError : public DataError {
 public:
  using DataError::DataError;
};

/// Dataset or config text that cannot be parsed; carries the location.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : DataError(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// State snapshot rejected (bad magic, version, length or checksum).
class SnapshotError : public DataError {
 public:
  using DataError::DataError;
};

/// Inference requested on a plane that holds no ink.
class UntrainedError : public DataError {
 public:
  using DataError::DataError;
};

/// Linear solve failed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ids
