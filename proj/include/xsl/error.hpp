#pragma once

#include <stdexcept>
#include <string>

namespace xsl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (corpus files, feature tables, models).
class DataError : public Error {
 public:
  using Error::Error;
};

// Degenerate numeric state: zero-norm vectors, non-finite losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace xsl
