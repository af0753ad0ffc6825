// Reference triple loops vs the OpenMP kernels, at the sizes the agents use
// (batch x width) and at a size large enough to open a parallel region.
#include <benchmark/benchmark.h>

#include <vector>

#include "climrl/nn/kernels.hpp"
#include "climrl/rng.hpp"

namespace {

using namespace climrl::nn;

struct Operands {
  std::vector<double> a, b, c;
  Operands(std::size_t m, std::size_t k, std::size_t n) : a(m * k), b(k * n), c(m * n) {
    climrl::RngStream rng(7);
    for (double& v : a) v = rng.uniform(-1, 1);
    for (double& v : b) v = rng.uniform(-1, 1);
  }
};

template <void (*Gemm)(const double*, const double*, double*, std::size_t, std::size_t,
                       std::size_t, bool)>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  Operands ops(m, k, n);
  for (auto _ : state) {
    Gemm(ops.a.data(), ops.b.data(), ops.c.data(), m, k, n, false);
    benchmark::DoNotOptimize(ops.c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m * k * n));
}

void Shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 64, 64})->Args({256, 64, 64})->Args({256, 256, 256})->Args({512, 512, 512});
}

}  // namespace

BENCHMARK(BM_Gemm<kernels::reference::gemm_nn>)->Name("reference/gemm_nn")->Apply(Shapes);
BENCHMARK(BM_Gemm<kernels::gemm_nn>)->Name("omp/gemm_nn")->Apply(Shapes);
BENCHMARK(BM_Gemm<kernels::reference::gemm_nt>)->Name("reference/gemm_nt")->Apply(Shapes);
BENCHMARK(BM_Gemm<kernels::gemm_nt>)->Name("omp/gemm_nt")->Apply(Shapes);
BENCHMARK(BM_Gemm<kernels::reference::gemm_tn>)->Name("reference/gemm_tn")->Apply(Shapes);
BENCHMARK(BM_Gemm<kernels::gemm_tn>)->Name("omp/gemm_tn")->Apply(Shapes);

BENCHMARK_MAIN();
