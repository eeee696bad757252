#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rescnn/errors.hpp"

namespace rescnn {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array. Every dimension is positive and
/// numel() == product(shape) always holds.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }
  const std::vector<T>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Same data, new shape with identical element count.
  BasicTensor reshaped(Shape shape) const& {
    if (checked_numel(shape) != numel()) {
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return BasicTensor(std::move(shape), data_);
  }
  BasicTensor reshaped(Shape shape) && {
    if (checked_numel(shape) != numel()) {
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return BasicTensor(std::move(shape), std::move(data_));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const BasicTensor&) const = default;

 private:
  static std::size_t checked_numel(const Shape& shape) {
    for (auto d : shape) {
      if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    return shape_numel(shape);
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using IndexTensor = BasicTensor<std::int64_t>;

/// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

Tensor& operator+=(Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double s);

bool all_finite(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rescnn
