#pragma once

#include <stdexcept>
#include <string>

namespace beamupdate {

// Violated precondition on caller-supplied data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Eigen-solve failures, singular partitions, non-terminating loops.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A finite-difference stencil point fell outside the parameter bounds.
class StencilOutOfBounds : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration problem tied to a key and (1-based) source line.
class ConfigError : public InvalidInput {
 public:
  ConfigError(std::string key, int line, const std::string& what)
      : InvalidInput("config: '" + key + "'" +
                     (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
                     ": " + what),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace beamupdate
