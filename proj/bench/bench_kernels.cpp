#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "rescnn/kernels.hpp"
#include "rescnn/rng.hpp"

namespace kernels = rescnn::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  rescnn::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Shapes from the full-size models: an LSTM gate product (batch 64, hidden 512,
// input 1024) and the first char-model convolution.
constexpr std::size_t kM = 64, kN = 2048, kK = 1536;

template <auto Gemm>
void BM_Gemm(benchmark::State& state) {
  const auto a = random_vector(kM * kK, 1), b = random_vector(kN * kK, 2);
  std::vector<double> c(kM * kN);
  for (auto _ : state) {
    Gemm(kM, kN, kK, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * kM * kN * kK));
}

const kernels::ConvGeometry kConv{4, 1014, 69, 256, 7, 1};

template <auto Conv>
void BM_ConvForward(benchmark::State& state) {
  const auto x = random_vector(kConv.batch * kConv.length * kConv.in_ch, 3);
  const auto w = random_vector(kConv.out_ch * kConv.in_ch * kConv.kernel, 4);
  const auto bias = random_vector(kConv.out_ch, 5);
  std::vector<double> y(kConv.batch * kConv.out_length() * kConv.out_ch);
  for (auto _ : state) {
    Conv(kConv, x, w, bias, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto ConvBack>
void BM_ConvBackward(benchmark::State& state) {
  const auto x = random_vector(kConv.batch * kConv.length * kConv.in_ch, 3);
  const auto w = random_vector(kConv.out_ch * kConv.in_ch * kConv.kernel, 4);
  const auto dy = random_vector(kConv.batch * kConv.out_length() * kConv.out_ch, 6);
  std::vector<double> dx(x.size()), dw(w.size()), db(kConv.out_ch);
  for (auto _ : state) {
    ConvBack(kConv, x, w, dy, dx, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gemm<kernels::omp::gemm_nt>)->Name("gemm_nt/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<kernels::serial::conv1d_forward>)->Name("conv1d_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<kernels::omp::conv1d_forward>)->Name("conv1d_forward/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<kernels::serial::conv1d_backward>)->Name("conv1d_backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<kernels::omp::conv1d_backward>)->Name("conv1d_backward/omp")->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
