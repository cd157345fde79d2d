#pragma once

#include <stdexcept>
#include <string>

namespace cinepred {

/// Base exception for every failure raised by the library. `kind()` is a
/// short machine-readable tag ("load", "invalid_argument", "rank",
/// "divergence", ...) that the CLI echoes on its error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class LoadError : public Error {
 public:
  explicit LoadError(const std::string& message) : Error("load", message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid_argument", message) {}
};

class RankError : public Error {
 public:
  explicit RankError(const std::string& message) : Error("rank", message) {}
};

/// Raised when an online learner produces non-finite state.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& message)
      : Error("divergence", message) {}
};

}  // namespace cinepred
