#pragma once

#include <stdexcept>
#include <string>

namespace oce {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shape or geometry mismatch between inputs.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// Numerical precondition violated (NaN input, degenerate normalisation, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace oce
