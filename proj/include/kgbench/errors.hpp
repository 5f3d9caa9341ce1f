#pragma once

#include <stdexcept>
#include <string>

namespace kgbench {

// Error taxonomy mirrors the CLI exit codes: config/usage errors (1),
// data errors (2), runtime errors such as divergence or a broken scorer
// subprocess (3).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data; carries file/line context when known.
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// External scorer subprocess violated the line protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgbench
