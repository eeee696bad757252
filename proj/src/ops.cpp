#include "rescnn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "rescnn/kernels.hpp"

namespace rescnn {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "none";
}

Activation parse_activation(const std::string& name) {
  if (name == "none") return Activation::kNone;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "'");
}

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + ": expected a matrix, got " + shape_str(t.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Tensor c({a.dim(0), b.dim(1)});
  kernels::omp::gemm_nn(a.dim(0), b.dim(1), a.dim(1), a.data(), b.data(), c.data());
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
  }
  Tensor c({a.dim(0), b.dim(0)});
  kernels::omp::gemm_nt(a.dim(0), b.dim(0), a.dim(1), a.data(), b.data(), c.data());
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_tn: inner dimensions differ, " + shape_str(a.shape()) + "^T x " + shape_str(b.shape()));
  }
  Tensor c({a.dim(1), b.dim(1)});
  kernels::omp::gemm_tn(a.dim(1), b.dim(1), a.dim(0), a.data(), b.data(), c.data());
  return c;
}

double sigmoid(double x) {
  // Two branches keep exp() from overflowing for large |x|.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor activate(const Tensor& x, Activation kind) {
  Tensor y = x;
  switch (kind) {
    case Activation::kNone: break;
    case Activation::kSigmoid: for (auto& v : y.data()) v = sigmoid(v); break;
    case Activation::kTanh: for (auto& v : y.data()) v = std::tanh(v); break;
    case Activation::kRelu: for (auto& v : y.data()) v = v > 0.0 ? v : 0.0; break;
  }
  return y;
}

Tensor activate_backward(const Tensor& y, const Tensor& grad_y, Activation kind) {
  require_same_shape(y.shape(), grad_y.shape(), "activate_backward");
  Tensor g = grad_y;
  for (std::size_t i = 0; i < g.numel(); ++i) {
    switch (kind) {
      case Activation::kNone: break;
      case Activation::kSigmoid: g[i] *= y[i] * (1.0 - y[i]); break;
      case Activation::kTanh: g[i] *= 1.0 - y[i] * y[i]; break;
      case Activation::kRelu: g[i] = y[i] > 0.0 ? g[i] : 0.0; break;
    }
  }
  return g;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("softmax: empty shape");
  const std::size_t c = x.shape().back();
  Tensor y = x;
  for (std::size_t r = 0; r < x.numel() / c; ++r) {
    double* row = y.raw() + r * c;
    const double m = *std::max_element(row, row + c);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - m);
      sum += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) row[j] /= sum;
  }
  return y;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& grad_probs) {
  require_same_shape(probs.shape(), grad_probs.shape(), "softmax_backward");
  const std::size_t c = probs.shape().back();
  Tensor g(probs.shape());
  for (std::size_t r = 0; r < probs.numel() / c; ++r) {
    const double* p = probs.raw() + r * c;
    const double* gp = grad_probs.raw() + r * c;
    double dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) dot += p[j] * gp[j];
    for (std::size_t j = 0; j < c; ++j) g[r * c + j] = p[j] * (gp[j] - dot);
  }
  return g;
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() == 0 ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw DimensionError("concat_last: leading dimensions differ, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t ca = a.shape().back();
  const std::size_t cb = b.shape().back();
  Shape shape = a.shape();
  shape.back() = ca + cb;
  Tensor out(shape);
  const std::size_t rows = a.numel() / ca;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.raw() + r * ca, ca, out.raw() + r * (ca + cb));
    std::copy_n(b.raw() + r * cb, cb, out.raw() + r * (ca + cb) + ca);
  }
  return out;
}

std::pair<Tensor, Tensor> split_last(const Tensor& x, std::size_t first) {
  const std::size_t c = x.shape().back();
  if (first == 0 || first >= c) {
    throw DimensionError("split_last: cannot split last axis of " + shape_str(x.shape()) + " at " + std::to_string(first));
  }
  Shape sa = x.shape();
  Shape sb = x.shape();
  sa.back() = first;
  sb.back() = c - first;
  Tensor a(sa);
  Tensor b(sb);
  const std::size_t rows = x.numel() / c;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.raw() + r * c, first, a.raw() + r * first);
    std::copy_n(x.raw() + r * c + first, c - first, b.raw() + r * (c - first));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace rescnn
