#include "rescnn/kernels.hpp"

#include <algorithm>

namespace rescnn::kernels::serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

void conv1d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  const std::size_t out_len = g.out_length();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t o = 0; o < g.out_ch; ++o) {
        double s = bias[o];
        for (std::size_t c = 0; c < g.in_ch; ++c) {
          for (std::size_t j = 0; j < g.kernel; ++j) {
            s += x[(b * g.length + t * g.stride + j) * g.in_ch + c] * w[(o * g.in_ch + c) * g.kernel + j];
          }
        }
        y[(b * out_len + t) * g.out_ch + o] = s;
      }
    }
  }
}

void conv1d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> dbias) {
  std::fill(dx.begin(), dx.end(), 0.0);
  std::fill(dw.begin(), dw.end(), 0.0);
  std::fill(dbias.begin(), dbias.end(), 0.0);
  const std::size_t out_len = g.out_length();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t o = 0; o < g.out_ch; ++o) {
        const double gy = dy[(b * out_len + t) * g.out_ch + o];
        dbias[o] += gy;
        for (std::size_t c = 0; c < g.in_ch; ++c) {
          for (std::size_t j = 0; j < g.kernel; ++j) {
            const std::size_t xi = (b * g.length + t * g.stride + j) * g.in_ch + c;
            const std::size_t wi = (o * g.in_ch + c) * g.kernel + j;
            dw[wi] += gy * x[xi];
            dx[xi] += gy * w[wi];
          }
        }
      }
    }
  }
}

}  // namespace rescnn::kernels::serial
