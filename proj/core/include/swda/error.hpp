#pragma once

#include <stdexcept>
#include <string>

namespace swda {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Blow-up, non-finite values, non-positive height.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated, or mismatched file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace swda
