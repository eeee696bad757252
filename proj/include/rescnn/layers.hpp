#pragma once

// Differentiable layers. Each forward has a matching *_backward that takes the
// upstream gradient and returns gradients for the inputs and parameters; the
// model graph composes them explicitly.

#include <cstddef>
#include <vector>

#include "rescnn/rng.hpp"
#include "rescnn/tensor.hpp"

namespace rescnn::nn {

// ---- embedding ------------------------------------------------------------

/// ids: batch x len, table: vocab x dim -> batch x len x dim.
Tensor embedding_lookup(const IndexTensor& ids, const Tensor& table);
/// Scatter-add of grad_out rows into a vocab x dim table gradient.
Tensor embedding_backward(const IndexTensor& ids, const Tensor& grad_out, std::size_t vocab);

/// Fixed one-hot code: id 0 is the zero vector, id k in [1, depth] sets
/// channel k-1. batch x len -> batch x len x depth.
Tensor one_hot(const IndexTensor& ids, std::size_t depth);

// ---- dense ----------------------------------------------------------------

struct DenseParams {
  Tensor weight;  // in x out
  Tensor bias;    // out

  std::size_t parameter_count() const { return weight.numel() + bias.numel(); }
};

struct DenseGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

/// x W + b over the last axis of x (any rank >= 2).
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
DenseGrads dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_y);

inline std::size_t dense_parameter_count(std::size_t in, std::size_t out) { return in * out + out; }

// ---- 1-D convolution ------------------------------------------------------

/// Valid-mode output length floor((len - kernel) / stride) + 1.
std::size_t conv_out_length(std::size_t len, std::size_t kernel, std::size_t stride);

/// Valid cross-correlation. x: batch x len x in_ch, kernels: out_ch x in_ch x k.
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t stride);

struct Conv1dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernels, const Tensor& grad_y,
                            std::size_t stride);

inline std::size_t conv1d_parameter_count(std::size_t in_ch, std::size_t out_ch, std::size_t kernel) {
  return out_ch * in_ch * kernel + out_ch;
}

// ---- max pooling ----------------------------------------------------------

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index feeding each output element
};

/// Non-overlapping windows along axis 1; trailing remainder is dropped and
/// ties go to the lowest index.
PoolResult maxpool1d(const Tensor& x, std::size_t window);
Tensor maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                          const Tensor& grad_y);

// ---- dropout --------------------------------------------------------------

struct DropoutResult {
  Tensor output;
  Tensor mask;  // 0 or 1/(1-rate) per element; empty when the layer is the identity
};

DropoutResult dropout(const Tensor& x, double rate, bool training, Rng& rng);
Tensor dropout_backward(const Tensor& mask, const Tensor& grad_y);

// ---- residual -------------------------------------------------------------

/// block_out + block_in, with block_in passed through `projection` first when
/// given (needed when the widths differ).
Tensor residual_add(const Tensor& block_out, const Tensor& block_in,
                    const DenseParams* projection = nullptr);

struct ResidualGrads {
  Tensor block_out;
  Tensor block_in;
  Tensor projection_weight;  // empty without projection
  Tensor projection_bias;
};

ResidualGrads residual_add_backward(const Tensor& block_in, const Tensor& grad_y,
                                    const DenseParams* projection = nullptr);

}  // namespace rescnn::nn
