#pragma once

#include <cstdint>
#include <vector>

#include "dybm/errors.hpp"

namespace dybm {

// N-dimensional binary time series, stored step-major so that the values of
// one time step are contiguous.
struct BinarySequence {
  int n_dims = 0;
  int length = 0;
  std::vector<std::uint8_t> values;  // [t*n_dims + i], each 0 or 1

  BinarySequence() = default;
  BinarySequence(int n, int t)
      : n_dims(n), length(t), values(std::size_t(n) * std::size_t(t), 0) {
    if (n < 1 || t < 0) throw ShapeError("BinarySequence: bad dimensions");
  }

  std::uint8_t at(int i, int t) const {
    return values[std::size_t(t) * n_dims + std::size_t(i)];
  }
  void set(int i, int t, std::uint8_t v) {
    values[std::size_t(t) * n_dims + std::size_t(i)] = v;
  }
  const std::uint8_t* step(int t) const {
    return values.data() + std::size_t(t) * n_dims;
  }
  std::uint8_t* step(int t) { return values.data() + std::size_t(t) * n_dims; }
};

}  // namespace dybm
