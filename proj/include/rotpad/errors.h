#pragma once

#include <stdexcept>
#include <string>

namespace rotpad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The input is well-formed but uses an encoding we do not handle.
class UnsupportedFormat : public Error {
 public:
  explicit UnsupportedFormat(const std::string& what)
      : Error("unsupported format: " + what) {}
};

// Malformed or truncated file contents.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

// A caller-supplied argument violates a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace rotpad
