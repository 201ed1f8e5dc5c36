#pragma once

#include <stdexcept>
#include <string>

namespace m2dqn {

// Argument outside an operation's precondition (bad action index, dimension
// mismatch, non-finite input).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called in a state that does not allow it, e.g. stepping an
// episode that already ended.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Environment name is known but cannot be constructed, or unknown entirely.
class UnsupportedEnvironment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace m2dqn
