#pragma once

#include <stdexcept>
#include <string>

namespace pcsamp {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

struct EmptyCloud : Error {
  using Error::Error;
};
struct InvalidK : Error {
  using Error::Error;
};
struct InvalidM : Error {
  using Error::Error;
};
struct InvalidCell : Error {
  using Error::Error;
};
struct InvalidTau : Error {
  using Error::Error;
};
struct DimMismatch : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct IncompatibleMode : Error {
  using Error::Error;
};
struct TooFewPoints : Error {
  using Error::Error;
};
struct Infeasible : Error {
  using Error::Error;
};
struct MissingMask : Error {
  using Error::Error;
};
struct UnknownGenerator : Error {
  using Error::Error;
};

}  // namespace pcsamp
