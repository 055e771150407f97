#pragma once

#include <stdexcept>
#include <string>

namespace stan {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied configuration (unknown keys, out-of-range values,
// contradictory options).  The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File / stream problems: missing files, malformed CSV rows when abort-on-error
// is selected, corrupt checkpoints.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Internal shape or dimension mismatch in the numeric code.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

}  // namespace stan
