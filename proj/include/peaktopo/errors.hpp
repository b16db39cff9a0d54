#pragma once

#include <stdexcept>
#include <string>

namespace peaktopo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or an unsupported combination of options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, inconsistent or degenerate input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// An internal postcondition did not hold. Always a bug.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace peaktopo
