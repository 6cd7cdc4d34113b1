#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdgnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (scenario, plan, pipeline config).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing, malformed, or insufficient data on disk or in memory.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, NaN gradients, undefined metrics.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Tensor / matrix shape contract violations.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Structured parse failure with position information.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset, std::ptrdiff_t record_index)
      : DataError(what + " (byte offset " + std::to_string(byte_offset) +
                  (record_index >= 0 ? ", record " + std::to_string(record_index) : std::string()) + ")"),
        byte_offset_(byte_offset),
        record_index_(record_index) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }
  // -1 when the failure is in the header.
  std::ptrdiff_t record_index() const noexcept { return record_index_; }

 private:
  std::size_t byte_offset_;
  std::ptrdiff_t record_index_;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class SimulationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace fdgnn
