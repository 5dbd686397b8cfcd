#pragma once

#include <stdexcept>
#include <string>

namespace flowlag {

// Argument outside the mathematical domain of an operation (t outside [0,1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Mismatched vector/matrix dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration value or unparsable config document.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values appeared in a computation that must stay finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API called in the wrong order (e.g. backward without a forward cache).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Corrupt or incompatible on-disk container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowlag
