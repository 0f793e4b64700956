#pragma once

#include <stdexcept>
#include <string>

namespace radialrouter {

/// Base of every error raised by the library. CLI maps `ValidationError`
/// descendants to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, inconsistent configs, out-of-range values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IndexError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// File-level corruption or schema violations (embeddings, checkpoints).
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// API misuse: calling operations out of order, non-scalar losses, etc.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace radialrouter
