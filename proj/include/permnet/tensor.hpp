#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace permnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Dense row-major buffer of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), values(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  double& operator[](std::size_t i) { return values[i]; }
  const double& operator[](std::size_t i) const { return values[i]; }

  double* data() noexcept { return values.data(); }
  const double* data() const noexcept { return values.data(); }
  std::span<double> span() noexcept { return values; }
  std::span<const double> span() const noexcept { return values; }

  void fill(double v) { std::fill(values.begin(), values.end(), v); }
  bool all_finite() const noexcept;

  bool operator==(const Tensor&) const = default;
};

}  // namespace permnet
