#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the offending token.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

  private:
    std::size_t offset_;
};

/// Numerical failure while evaluating an expression at a point.
class EvalError : public Error {
  public:
    using Error::Error;
};

/// Exact rational arithmetic left the 64-bit range.
class OverflowError : public Error {
  public:
    using Error::Error;
};

/// Bad user input: files, dimensions, points, options.
class InputError : public Error {
  public:
    using Error::Error;
};

/// A geometric precondition failed (non-contact frame, not special, ...).
class GeometryError : public Error {
  public:
    using Error::Error;
};

/// A computation would exceed a configured size bound.
class LimitError : public Error {
  public:
    using Error::Error;
};

} // namespace srk
