#include "rescnn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace rescnn {

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

Tensor& operator+=(Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  auto out = a.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  return a;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  r += b;
  return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor r = a;
  for (std::size_t i = 0; i < r.numel(); ++i) r[i] -= b[i];
  return r;
}

Tensor operator*(const Tensor& a, double s) {
  Tensor r = a;
  for (auto& v : r.data()) v *= s;
  return r;
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace rescnn
