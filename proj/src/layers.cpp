#include "rescnn/layers.hpp"

#include <algorithm>

#include "rescnn/kernels.hpp"
#include "rescnn/ops.hpp"

namespace rescnn::nn {

Tensor embedding_lookup(const IndexTensor& ids, const Tensor& table) {
  if (ids.rank() != 2) throw DimensionError("embedding: ids must be batch x len, got " + shape_str(ids.shape()));
  if (table.rank() != 2) throw DimensionError("embedding: table must be vocab x dim, got " + shape_str(table.shape()));
  const std::size_t vocab = table.dim(0);
  const std::size_t dim = table.dim(1);
  Tensor out({ids.dim(0), ids.dim(1), dim});
  for (std::size_t i = 0; i < ids.numel(); ++i) {
    const auto id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError("embedding: id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
    }
    std::copy_n(table.raw() + id * dim, dim, out.raw() + i * dim);
  }
  return out;
}

Tensor embedding_backward(const IndexTensor& ids, const Tensor& grad_out, std::size_t vocab) {
  const std::size_t dim = grad_out.shape().back();
  if (grad_out.numel() != ids.numel() * dim) {
    throw DimensionError("embedding_backward: gradient " + shape_str(grad_out.shape()) + " does not match ids " + shape_str(ids.shape()));
  }
  Tensor grad({vocab, dim});
  for (std::size_t i = 0; i < ids.numel(); ++i) {
    const auto id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) throw IndexError("embedding_backward: id out of range");
    const double* src = grad_out.raw() + i * dim;
    double* dst = grad.raw() + id * dim;
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
  }
  return grad;
}

Tensor one_hot(const IndexTensor& ids, std::size_t depth) {
  if (ids.rank() != 2) throw DimensionError("one_hot: ids must be batch x len, got " + shape_str(ids.shape()));
  Tensor out({ids.dim(0), ids.dim(1), depth});
  for (std::size_t i = 0; i < ids.numel(); ++i) {
    const auto id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) > depth) {
      throw IndexError("one_hot: id " + std::to_string(id) + " outside [0, " + std::to_string(depth) + "]");
    }
    if (id > 0) out[i * depth + static_cast<std::size_t>(id - 1)] = 1.0;
  }
  return out;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() < 2 || weight.rank() != 2 || bias.rank() != 1) {
    throw DimensionError("dense: bad ranks x" + shape_str(x.shape()) + " W" + shape_str(weight.shape()) + " b" + shape_str(bias.shape()));
  }
  const std::size_t in = x.shape().back();
  if (in != weight.dim(0) || bias.dim(0) != weight.dim(1)) {
    throw DimensionError("dense: shape mismatch x" + shape_str(x.shape()) + " W" + shape_str(weight.shape()) + " b" + shape_str(bias.shape()));
  }
  const std::size_t out = weight.dim(1);
  const std::size_t rows = x.numel() / in;
  Shape shape = x.shape();
  shape.back() = out;
  Tensor y(shape);
  kernels::omp::gemm_nn(rows, out, in, x.data(), weight.data(), y.data());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < out; ++j) y[r * out + j] += bias[j];
  return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_y) {
  const std::size_t in = weight.dim(0);
  const std::size_t out = weight.dim(1);
  const std::size_t rows = x.numel() / in;
  if (grad_y.numel() != rows * out) {
    throw DimensionError("dense_backward: gradient " + shape_str(grad_y.shape()) + " does not match output of x" + shape_str(x.shape()));
  }
  DenseGrads g{Tensor(x.shape()), Tensor(weight.shape()), Tensor({out})};
  kernels::omp::gemm_nt(rows, in, out, grad_y.data(), weight.data(), g.input.data());
  kernels::omp::gemm_tn(in, out, rows, x.data(), grad_y.data(), g.weight.data());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < out; ++j) g.bias[j] += grad_y[r * out + j];
  return g;
}

std::size_t conv_out_length(std::size_t len, std::size_t kernel, std::size_t stride) {
  if (kernel == 0 || stride == 0) throw DimensionError("conv1d: kernel and stride must be positive");
  if (len < kernel) {
    throw DimensionError("conv1d: input length " + std::to_string(len) + " shorter than kernel " + std::to_string(kernel));
  }
  return (len - kernel) / stride + 1;
}

namespace {

kernels::ConvGeometry conv_geometry(const Tensor& x, const Tensor& kernels, std::size_t stride) {
  if (x.rank() != 3 || kernels.rank() != 3) {
    throw DimensionError("conv1d: expected x batch x len x ch and kernels out x in x k, got " + shape_str(x.shape()) + " and " + shape_str(kernels.shape()));
  }
  if (x.dim(2) != kernels.dim(1)) {
    throw DimensionError("conv1d: input channels " + shape_str(x.shape()) + " vs kernels " + shape_str(kernels.shape()));
  }
  kernels::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), kernels.dim(0), kernels.dim(2), stride};
  conv_out_length(g.length, g.kernel, g.stride);
  return g;
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t stride) {
  const auto g = conv_geometry(x, kernels, stride);
  if (bias.rank() != 1 || bias.dim(0) != g.out_ch) {
    throw DimensionError("conv1d: bias " + shape_str(bias.shape()) + " vs kernels " + shape_str(kernels.shape()));
  }
  Tensor y({g.batch, g.out_length(), g.out_ch});
  kernels::omp::conv1d_forward(g, x.data(), kernels.data(), bias.data(), y.data());
  return y;
}

Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernels, const Tensor& grad_y,
                            std::size_t stride) {
  const auto g = conv_geometry(x, kernels, stride);
  require_same_shape(grad_y.shape(), Shape{g.batch, g.out_length(), g.out_ch}, "conv1d_backward");
  Conv1dGrads out{Tensor(x.shape()), Tensor(kernels.shape()), Tensor({g.out_ch})};
  kernels::omp::conv1d_backward(g, x.data(), kernels.data(), grad_y.data(), out.input.data(),
                                out.kernels.data(), out.bias.data());
  return out;
}

PoolResult maxpool1d(const Tensor& x, std::size_t window) {
  if (x.rank() != 3) throw DimensionError("maxpool1d: expected batch x len x ch, got " + shape_str(x.shape()));
  if (window == 0 || x.dim(1) < window) {
    throw DimensionError("maxpool1d: length " + std::to_string(x.dim(1)) + " shorter than window " + std::to_string(window));
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2);
  const std::size_t out_len = len / window;
  PoolResult r{Tensor({batch, out_len, ch}), std::vector<std::size_t>(batch * out_len * ch)};
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = (b * len + t * window) * ch + c;
        for (std::size_t j = 1; j < window; ++j) {
          const std::size_t idx = (b * len + t * window + j) * ch + c;
          if (x[idx] > x[best]) best = idx;
        }
        const std::size_t o = (b * out_len + t) * ch + c;
        r.output[o] = x[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                          const Tensor& grad_y) {
  if (argmax.size() != grad_y.numel()) throw DimensionError("maxpool1d_backward: argmax/gradient size mismatch");
  Tensor g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_y[i];
  return g;
}

DropoutResult dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return {x, Tensor()};
  const double keep_scale = 1.0 / (1.0 - rate);
  DropoutResult r{x, Tensor(x.shape())};
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double m = rng.bernoulli(rate) ? 0.0 : keep_scale;
    r.mask[i] = m;
    r.output[i] *= m;
  }
  return r;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& grad_y) {
  if (mask.empty()) return grad_y;
  require_same_shape(mask.shape(), grad_y.shape(), "dropout_backward");
  Tensor g = grad_y;
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= mask[i];
  return g;
}

Tensor residual_add(const Tensor& block_out, const Tensor& block_in, const DenseParams* projection) {
  if (projection == nullptr) {
    if (block_out.shape() != block_in.shape()) {
      throw DimensionError("residual_add: shapes " + shape_str(block_out.shape()) + " and " + shape_str(block_in.shape()) + " differ and no projection was given");
    }
    return block_out + block_in;
  }
  Tensor skip = dense(block_in, projection->weight, projection->bias);
  require_same_shape(block_out.shape(), skip.shape(), "residual_add (projected)");
  return block_out + skip;
}

ResidualGrads residual_add_backward(const Tensor& block_in, const Tensor& grad_y,
                                    const DenseParams* projection) {
  if (projection == nullptr) return {grad_y, grad_y, Tensor(), Tensor()};
  DenseGrads d = dense_backward(block_in, projection->weight, grad_y);
  return {grad_y, std::move(d.input), std::move(d.weight), std::move(d.bias)};
}

}  // namespace rescnn::nn
