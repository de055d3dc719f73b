#pragma once

#include <stdexcept>
#include <string>

namespace promises {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Shapes that do not conform.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A decomposition or inversion failed, or the problem is degenerate.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Covariance estimation requested with too few subjects.
class ExistenceError : public Error {
public:
  using Error::Error;
};

/// File contents could not be parsed.
class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace promises
