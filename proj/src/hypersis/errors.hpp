#pragma once

#include <stdexcept>
#include <string>

namespace hypersis {

/// Bad input: malformed files, violated preconditions, inconsistent configs.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A request the library refuses because it would not fit, such as a master
/// system above the configured node cap.
class CapacityError : public ValidationError {
 public:
  explicit CapacityError(const std::string& what) : ValidationError(what) {}
};

/// Numerical failure during a computation that was valid to start.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hypersis
