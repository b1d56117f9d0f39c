#pragma once

#include <stdexcept>
#include <string>

namespace modalme {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument of a gamma-family function hit a non-positive integer.
struct PoleError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  using Error::Error;
};

struct NoReplicatesError : Error {
  using Error::Error;
};

struct RankError : Error {
  using Error::Error;
};

struct SingularityError : Error {
  using Error::Error;
};

struct MatrixError : Error {
  using Error::Error;
};

struct GridError : Error {
  using Error::Error;
};

struct DegenerateError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

}  // namespace modalme
