#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fastspec {

/// Base of every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const { return 1; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 1; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 1; }
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config error at '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }
  int exit_code() const override { return 3; }

 private:
  std::string field_;
};

/// Raised when a pixel-level matrix would exceed the configured size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  /// Best residuals reached before giving up, one per requested pair.
  const std::vector<double>& residuals() const { return residuals_; }
  int exit_code() const override { return 5; }

 private:
  std::vector<double> residuals_;
};

/// A graph vertex with zero degree; the normalized Laplacian is undefined.
class IsolatedNodeError : public Error {
 public:
  explicit IsolatedNodeError(std::size_t node)
      : Error("node " + std::to_string(node) +
              " has zero degree (isolated); check affinity parameters or "
              "enable degree regularization"),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

}  // namespace fastspec
