#pragma once

// Hot loops behind the dense, LSTM and convolution layers. Two builds of every
// kernel share one signature: `serial` is the plain reference used by tests,
// `omp` is the OpenMP version the layers call. Both write every output element
// from a single thread in a fixed order, so results do not depend on the
// thread count.

#include <cstddef>
#include <span>

namespace rescnn::kernels {

struct ConvGeometry {
  std::size_t batch;
  std::size_t length;    // input steps
  std::size_t in_ch;
  std::size_t out_ch;
  std::size_t kernel;
  std::size_t stride;

  std::size_t out_length() const { return (length - kernel) / stride + 1; }
};

#define RESCNN_KERNEL_DECLS                                                                          \
  /* c = a(m x k) * b(k x n); accumulate adds into c instead of overwriting */                      \
  void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,             \
               std::span<const double> b, std::span<double> c, bool accumulate = false);           \
  /* c = a(m x k) * b(n x k)^T */                                                                   \
  void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,             \
               std::span<const double> b, std::span<double> c, bool accumulate = false);           \
  /* c = a(k x m)^T * b(k x n) */                                                                   \
  void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,             \
               std::span<const double> b, std::span<double> c, bool accumulate = false);           \
  /* x: batch x length x in_ch, w: out_ch x in_ch x kernel, y: batch x out_length x out_ch */       \
  void conv1d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w, \
                      std::span<const double> bias, std::span<double> y);                         \
  /* overwrites dx, dw, dbias */                                                                    \
  void conv1d_backward(const ConvGeometry& g, std::span<const double> x,                           \
                       std::span<const double> w, std::span<const double> dy,                      \
                       std::span<double> dx, std::span<double> dw, std::span<double> dbias);

namespace serial {
RESCNN_KERNEL_DECLS
}  // namespace serial

namespace omp {
RESCNN_KERNEL_DECLS
}  // namespace omp

#undef RESCNN_KERNEL_DECLS

}  // namespace rescnn::kernels
