#pragma once

#include <stdexcept>
#include <string>

namespace homeostat {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A constructor or operation received a value outside its domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A network failed validation; what() lists the error diagnostics.
class InvalidNetwork : public Error {
 public:
  using Error::Error;
};

// I - P is singular or the routing matrix has spectral radius >= 1.
class NonTransientError : public Error {
 public:
  using Error::Error;
};

// Signal spectra or delay families violate a homeostasis class condition.
class ClassConditionError : public Error {
 public:
  using Error::Error;
};

// An iterative solver exhausted its iteration or refinement budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed JSON documents; what() names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace homeostat
