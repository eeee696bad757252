#include "rescnn/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace rescnn::kernels::omp {
namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;

using Index = std::int64_t;

// [out_ch][in_ch][kernel] -> [out_ch][kernel][in_ch], so that one output
// position is a dot product over a contiguous kernel*in_ch input window.
std::vector<double> window_major(const ConvGeometry& g, std::span<const double> w) {
  std::vector<double> wt(w.size());
  for (std::size_t o = 0; o < g.out_ch; ++o)
    for (std::size_t c = 0; c < g.in_ch; ++c)
      for (std::size_t j = 0; j < g.kernel; ++j)
        wt[(o * g.kernel + j) * g.in_ch + c] = w[(o * g.in_ch + c) * g.kernel + j];
  return wt;
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    double* row = pc + i * n;
    if (!accumulate) std::fill(row, row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      pc[i * n + j] = accumulate ? pc[i * n + j] + s : s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    double* row = pc + i * n;
    if (!accumulate) std::fill(row, row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[p * m + i];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

void conv1d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  const std::size_t out_len = g.out_length();
  const std::size_t window = g.kernel * g.in_ch;
  const std::vector<double> wt = window_major(g, w);
  const double* px = x.data();
  const double* pw = wt.data();
  double* py = y.data();
  const auto rows = static_cast<Index>(g.batch * out_len);
#pragma omp parallel for schedule(static) if (rows * g.out_ch * window > kParallelWork)
  for (Index r = 0; r < rows; ++r) {
    const std::size_t b = r / out_len;
    const std::size_t t = r % out_len;
    const double* xw = px + (b * g.length + t * g.stride) * g.in_ch;
    double* yrow = py + r * g.out_ch;
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      const double* wo = pw + o * window;
      double s = 0.0;
      for (std::size_t q = 0; q < window; ++q) s += xw[q] * wo[q];
      yrow[o] = bias[o] + s;
    }
  }
}

void conv1d_backward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> dbias) {
  const std::size_t out_len = g.out_length();
  const std::size_t window = g.kernel * g.in_ch;
  const std::vector<double> wt = window_major(g, w);
  std::vector<double> dwt(wt.size(), 0.0);
  const double* px = x.data();
  const double* pdy = dy.data();
  const std::size_t work = g.batch * out_len * g.out_ch * window;

  // Weight and bias gradients: each output channel is owned by one thread.
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (Index o = 0; o < static_cast<Index>(g.out_ch); ++o) {
    double* dwo = dwt.data() + o * window;
    double db = 0.0;
    for (std::size_t b = 0; b < g.batch; ++b) {
      for (std::size_t t = 0; t < out_len; ++t) {
        const double gy = pdy[(b * out_len + t) * g.out_ch + o];
        db += gy;
        if (gy == 0.0) continue;
        const double* xw = px + (b * g.length + t * g.stride) * g.in_ch;
        for (std::size_t q = 0; q < window; ++q) dwo[q] += gy * xw[q];
      }
    }
    dbias[o] = db;
  }

  // Input gradient: each sample is owned by one thread.
  double* pdx = dx.data();
  std::fill(dx.begin(), dx.end(), 0.0);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (Index b = 0; b < static_cast<Index>(g.batch); ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      double* dxw = pdx + (b * g.length + t * g.stride) * g.in_ch;
      const double* gyrow = pdy + (b * out_len + t) * g.out_ch;
      for (std::size_t o = 0; o < g.out_ch; ++o) {
        const double gy = gyrow[o];
        if (gy == 0.0) continue;
        const double* wo = wt.data() + o * window;
        for (std::size_t q = 0; q < window; ++q) dxw[q] += gy * wo[q];
      }
    }
  }

  for (std::size_t o = 0; o < g.out_ch; ++o)
    for (std::size_t c = 0; c < g.in_ch; ++c)
      for (std::size_t j = 0; j < g.kernel; ++j)
        dw[(o * g.in_ch + c) * g.kernel + j] = dwt[(o * g.kernel + j) * g.in_ch + c];
}

}  // namespace rescnn::kernels::omp
