#pragma once

#include <stdexcept>
#include <string>

namespace rep3net {

/// Base class for every error raised by the toolkit. The CLI maps the
/// subclasses onto exit codes (data errors -> 2, numeric failures -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data: malformed CSV, missing columns,
/// unknown keys, shape mismatches between stored artifacts.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A binary file (embedding store, checkpoint) failed validation.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// NaN/Inf produced or consumed, singular statistics, impossible shapes.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace rep3net
