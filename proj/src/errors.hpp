#pragma once

#include <stdexcept>
#include <string>

namespace scd {

// Every failure raised by the library derives from Error. The category maps
// one-to-one onto the status codes of the C API.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Violated precondition of an operation (non-scalar loss, bad spatial size...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration key or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or out-of-range input data (labels, rasters, files).
class DataError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator vanishes.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace scd
