#pragma once

#include <stdexcept>
#include <string>

namespace arplace {

/// Base class for data and algorithm failures (bad input files, degenerate
/// geometry, violated preconditions). The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input. The message carries file/line context.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace arplace
