#pragma once

#include <stdexcept>
#include <string>

namespace rockgraph {

// Precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical procedure failed (integrator underflow, non-finite loss, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Object used before it was ready (e.g. predicting with an untrained model).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rockgraph
