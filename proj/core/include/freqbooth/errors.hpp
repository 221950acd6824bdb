#pragma once

#include <stdexcept>
#include <string>

namespace freqbooth {

// Shapes or inner dimensions of operands do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad user-facing input: flags, files, out-of-range scalars.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A prerequisite (checkpoint, training stage) is missing or out of order.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf or a singular step encountered during computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace freqbooth
