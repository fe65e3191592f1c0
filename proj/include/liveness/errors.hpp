#pragma once

#include <stdexcept>
#include <string>

namespace liveness {

/// Tensor or layer shape contract violated.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf appeared where every value must be finite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation called in the wrong order (e.g. backward before forward).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Bad user-supplied configuration or argument.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace liveness
