#pragma once

#include <stdexcept>
#include <string>

namespace mode {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension disagreement between operands; messages name both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value; messages name the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where a finite one is required (diverged loss etc.).
class NumericError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

// No configuration satisfies the requested parameter budget.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mode
