#pragma once

#include <stdexcept>
#include <string>

namespace robustcov {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed data or parameters that violate a documented precondition
/// (wrong shape, non-finite entries, out-of-range tuning constants, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A CSV or JSON input file could not be parsed against its contract.
class IngestionError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

/// The factor second-moment block is numerically singular, so the low-rank
/// part of the decomposition cannot be formed reliably.
class SingularFactorCovarianceError : public Error {
 public:
  using Error::Error;
};

/// An operation required a positive (semi)definite matrix and the input was
/// not; run the PSD repair step and retry.
class NeedsPsdRepairError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine failed to reach its tolerance or produced non-finite
/// intermediates.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace robustcov
