#pragma once

#include <stdexcept>
#include <string>

namespace calguard {

// Input that violates an operation's precondition (bad dimensions, non-finite
// values, out-of-range probabilities, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration object that violates its own invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File ingestion failures. The message names the offending row/column.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace calguard
