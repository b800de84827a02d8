#pragma once

#include <stdexcept>
#include <string>

namespace tailored {

// Base of every error thrown by the library. The subclasses map one-to-one
// onto the CLI exit codes, so callers can tell a bad flag from bad data from
// a chain that could not start.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class SamplerError : public Error {
 public:
  using Error::Error;
};

class RecalibrationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tailored
