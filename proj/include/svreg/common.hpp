#pragma once

#include <stdexcept>
#include <string>

namespace svreg {

#ifdef SVREG_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

inline constexpr double kTwoPi = 6.28318530717958647692528676655900577;
inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGridError : public Error {
 public:
  using Error::Error;
};

class ResampleError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ObjectiveError : public Error {
 public:
  using Error::Error;
};

class SearchError : public Error {
 public:
  using Error::Error;
};

/// File access and format problems; the CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent arguments (shape mismatch, out-of-range settings).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace svreg
