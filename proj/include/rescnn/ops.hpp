#pragma once

#include "rescnn/tensor.hpp"

namespace rescnn {

enum class Activation { kNone, kSigmoid, kTanh, kRelu };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// a[m x k] * b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// a[m x k] * b[n x k]^T.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a[k x m]^T * b[k x n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);

double sigmoid(double x);

Tensor activate(const Tensor& x, Activation kind);
/// Gradient through an elementwise activation, expressed in terms of its
/// output y = activate(x).
Tensor activate_backward(const Tensor& y, const Tensor& grad_y, Activation kind);

/// Softmax over the last axis, max-subtracted.
Tensor softmax(const Tensor& x);
/// Vector-Jacobian product of softmax given its output.
Tensor softmax_backward(const Tensor& probs, const Tensor& grad_probs);

/// Concatenate along the last axis; all leading dims must agree.
Tensor concat_last(const Tensor& a, const Tensor& b);
/// Inverse of concat_last: split the last axis at `first` columns.
std::pair<Tensor, Tensor> split_last(const Tensor& x, std::size_t first);

}  // namespace rescnn
