#pragma once

#include <stdexcept>
#include <string>

namespace smc_optl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization failed even after diagonal jitter.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// All importance weights are zero (every log-weight is -inf) or NaN.
class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

/// Malformed parameters: mismatched dimensions, asymmetric covariance, bad weights.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace smc_optl
