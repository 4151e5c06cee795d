#pragma once

#include <stdexcept>
#include <string>

namespace roughball {

/// Thrown for violated preconditions: dimension mismatch, bad indices, bad grids.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot proceed (singular Gram matrix,
/// insufficient fit points, resolution floor reached where a value is required).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by the configuration layer; names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace roughball
