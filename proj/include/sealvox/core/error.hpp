#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sealvox {

/// Base class for all recoverable library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input record. `location` is a 1-based line number for text
/// formats or a byte offset for binary ones.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what + " (at " + std::to_string(location) + ")"), location_(location) {}
  std::size_t location() const { return location_; }

 private:
  std::size_t location_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace sealvox
