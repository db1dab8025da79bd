#pragma once

#include <stdexcept>
#include <string>

namespace scusum {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// A success probability evaluated to exactly 0 or 1 where a score needs it interior.
class DegenerateProbabilityError : public Error {
 public:
  using Error::Error;
};

/// All outcomes in one class (or constant inputs): the likelihood has no finite maximizer.
class SeparationError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class SpendExhaustedError : public Error {
 public:
  using Error::Error;
};

class StreamExhaustedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace scusum
