#pragma once

#include <stdexcept>
#include <string>

namespace brw {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the declared domain of an operation (e.g. θ outside 𝒟).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// |m(λ)| is below the underflow threshold; the martingale is undefined at λ.
class ZeroTransform : public Error {
 public:
  using Error::Error;
};

class PopulationCapExceeded : public Error {
 public:
  using Error::Error;
};

/// The tilted offspring measure E[Σ|L|^α δ_{-log|L|}] is not a probability measure.
class NotNormalized : public Error {
 public:
  using Error::Error;
};

class SearchExhausted : public Error {
 public:
  using Error::Error;
};

class MonotonicityViolation : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NoUnitEigenvalue : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace brw
