#pragma once

#include <cstddef>
#include <vector>

#include "sptrim/errors.hpp"

namespace sptrim {

// Dense N-dimensional array of 64-bit floats, flat row-major storage.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(volume(shape), 0.0) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (volume(shape) != data.size())
      throw DimError("tensor data length does not match shape volume");
  }

  static std::size_t volume(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

bool all_finite(const Tensor& t);
double squared_distance(const Tensor& a, const Tensor& b);
double norm2(const Tensor& t);

}  // namespace sptrim
