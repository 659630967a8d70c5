#ifndef FACEATTR_ERRORS_HPP
#define FACEATTR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace faceattr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate landmark configurations, zero-area boxes, singular transforms.
struct GeometryError : Error {
  using Error::Error;
};

/// Malformed annotation/table text; carries the 1-based offending line.
struct ParseError : Error {
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

/// Fewer than two sample pairs in a paired test.
struct TooFewSamplesError : Error {
  using Error::Error;
};

/// All paired differences identical; the t statistic is undefined.
struct ZeroVarianceError : Error {
  using Error::Error;
};

/// NaN loss during optimization.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace faceattr

#endif
