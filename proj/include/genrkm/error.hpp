#pragma once

#include <stdexcept>
#include <string>

namespace genrkm {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-conformable or malformed dimensions.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// API misuse that is detectable at call time (re-centering, bad flags).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Non-finite values or numerically meaningless results.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Iterative solver exceeded its iteration cap.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

// Operation requires spectrum components that are numerically absent.
class RankError : public Error {
 public:
  explicit RankError(const std::string& msg) : Error(msg) {}
};

// File format or filesystem failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace genrkm
