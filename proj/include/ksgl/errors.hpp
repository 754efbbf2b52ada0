#pragma once

#include <stdexcept>
#include <string>

namespace ksgl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: wrong shapes, asymmetric matrices, malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Eigensolver failures, non-finite values, line-search breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LineSearchError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Dense test-scale routines refuse sizes beyond their cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// The two dense Hessian assemblies disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ksgl
