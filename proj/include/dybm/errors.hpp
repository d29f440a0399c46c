#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dybm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message carries the byte offset of the defect.
class ParseError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Pearson r is undefined when either coordinate has zero variance.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, std::uint64_t step, double max_abs_grad)
      : Error(msg + " (step " + std::to_string(step) +
              ", max|grad| " + std::to_string(max_abs_grad) + ")"),
        step(step),
        max_abs_grad(max_abs_grad) {}

  std::uint64_t step = 0;
  double max_abs_grad = 0.0;
};

}  // namespace dybm
