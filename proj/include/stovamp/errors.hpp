#pragma once

#include <stdexcept>
#include <string>

namespace stovamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector or operator sizes.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A NaN/Inf appeared, or a numeric kernel could not produce a finite value.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Invalid user-facing parameter (damping, iteration count, config keys, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Operation not supported by the operator (e.g. Gram diagonal on a general A).
class CapabilityError : public Error {
public:
  using Error::Error;
};

/// Function precondition violated (non-positive precision, negative argument, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Malformed input file.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace stovamp
