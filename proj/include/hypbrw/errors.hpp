#pragma once

#include <stdexcept>
#include <string>

namespace hypbrw {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed configuration, violated precondition, unknown id.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A weight r or mean offspring lambda outside the transient regime [1, 1/rho].
class RegimeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A size or work budget would be exceeded.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to reach its tolerance.
class NotConverged : public Error {
 public:
  using Error::Error;
};

}  // namespace hypbrw
