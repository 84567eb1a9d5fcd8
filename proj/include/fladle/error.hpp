#pragma once

#include <stdexcept>
#include <string>

namespace fladle {

// Base class for every recoverable failure raised by the library. The CLI maps
// these to exit code 2 (data or numerical error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Observation time outside the [0,1] domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// A local window with too few (or collinear) design points.
class BandwidthTooSmallError : public Error {
 public:
  using Error::Error;
};

class BandwidthSelectionError : public Error {
 public:
  using Error::Error;
};

class DesignMismatchError : public Error {
 public:
  using Error::Error;
};

class SparseDesignError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

class InsufficientSignalError : public Error {
 public:
  using Error::Error;
};

class CollinearityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fladle
