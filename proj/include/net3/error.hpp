#pragma once

#include <stdexcept>
#include <string>

namespace net3 {

/// Tensor or matrix dimensions do not line up for the requested operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument is outside the operation's domain (bad rank, duplicate mode, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a structural requirement (asymmetric adjacency, bad file).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace net3
