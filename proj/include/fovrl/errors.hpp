#pragma once

#include <stdexcept>
#include <string>

namespace fovrl {

// Frame or tensor data that does not satisfy its documented shape/range.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration object that violates its invariants.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidShape : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a precondition (stepping a finished episode, out-of-range
// rollout index, non-scalar backward root, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment config file problems; the message names the offending line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fovrl
