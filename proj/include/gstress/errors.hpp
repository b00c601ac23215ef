#pragma once

#include <stdexcept>
#include <string>

namespace gstress {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A jet operation left the smooth locus of its function
/// (division by a jet with zero constant term, log of a non-positive value, ...).
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// Mismatched jet shapes, multi-indices out of range, exhausted derivative order.
class JetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Point outside the (margined) chart, bad catalog parameters, malformed specs.
class ChartError : public Error {
 public:
  using Error::Error;
};

/// The differential of the immersion lost rank, or a frame could not be built.
class DegenerateImmersionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gstress
