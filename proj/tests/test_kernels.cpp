#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "rescnn/kernels.hpp"
#include "rescnn/rng.hpp"

using namespace rescnn;

namespace {

std::vector<double> rand_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Kernels, GemmVariantsAgreeWithSerial) {
  Rng rng(1);
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> sizes{{3, 4, 5}, {64, 96, 80}, {1, 300, 200}};
  for (auto [m, n, k] : sizes) {
    const auto a = rand_vec(m * k, rng), b = rand_vec(k * n, rng), bt = rand_vec(n * k, rng), at = rand_vec(k * m, rng);
    std::vector<double> s(m * n, 0.5), p(m * n, 0.5);
    kernels::serial::gemm_nn(m, n, k, a, b, s, true);
    kernels::omp::gemm_nn(m, n, k, a, b, p, true);
    EXPECT_LT(max_diff(s, p), 1e-12);
    kernels::serial::gemm_nt(m, n, k, a, bt, s);
    kernels::omp::gemm_nt(m, n, k, a, bt, p);
    EXPECT_LT(max_diff(s, p), 1e-12);
    kernels::serial::gemm_tn(m, n, k, at, b, s);
    kernels::omp::gemm_tn(m, n, k, at, b, p);
    EXPECT_LT(max_diff(s, p), 1e-12);
  }
}

TEST(Kernels, ConvForwardAndBackwardAgreeWithSerial) {
  Rng rng(2);
  for (const kernels::ConvGeometry g : {kernels::ConvGeometry{2, 40, 5, 6, 7, 1}, kernels::ConvGeometry{3, 50, 4, 3, 3, 3},
                                        kernels::ConvGeometry{1, 200, 69, 32, 7, 1}}) {
    const std::size_t ol = g.out_length();
    const auto x = rand_vec(g.batch * g.length * g.in_ch, rng), w = rand_vec(g.out_ch * g.in_ch * g.kernel, rng),
               bias = rand_vec(g.out_ch, rng), dy = rand_vec(g.batch * ol * g.out_ch, rng);
    std::vector<double> ys(g.batch * ol * g.out_ch), yp(ys.size());
    kernels::serial::conv1d_forward(g, x, w, bias, ys);
    kernels::omp::conv1d_forward(g, x, w, bias, yp);
    EXPECT_LT(max_diff(ys, yp), 1e-12);

    std::vector<double> dxs(x.size(), 9), dws(w.size(), 9), dbs(g.out_ch, 9);
    std::vector<double> dxp(x.size(), -9), dwp(w.size(), -9), dbp(g.out_ch, -9);
    kernels::serial::conv1d_backward(g, x, w, dy, dxs, dws, dbs);
    kernels::omp::conv1d_backward(g, x, w, dy, dxp, dwp, dbp);
    EXPECT_LT(max_diff(dxs, dxp), 1e-12);
    EXPECT_LT(max_diff(dws, dwp), 1e-12);
    EXPECT_LT(max_diff(dbs, dbp), 1e-12);
  }
}

TEST(Kernels, ResultIndependentOfThreadCount) {
  Rng rng(3);
  const std::size_t m = 80, n = 120, k = 90;
  const auto a = rand_vec(m * k, rng), b = rand_vec(k * n, rng);
  std::vector<double> one(m * n), many(m * n);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  kernels::omp::gemm_nn(m, n, k, a, b, one);
  omp_set_num_threads(4);
  kernels::omp::gemm_nn(m, n, k, a, b, many);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, many);
}

TEST(Kernels, NanPropagatesThroughGemm) {
  std::vector<double> a{0.0, 0.0}, b{std::nan(""), 1.0}, c(1);
  kernels::omp::gemm_nn(1, 1, 2, a, b, c);
  EXPECT_TRUE(std::isnan(c[0]));
}
