// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "pila/kernels.hpp"
#include "pila/mogi.hpp"
#include "pila/rng.hpp"

namespace {

pila::Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  pila::CounterRng rng(seed);
  pila::Tensor t(r, c);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

template <pila::Tensor (*Kernel)(const pila::Tensor&, const pila::Tensor&)>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor(n, 128, 1);
  const auto b = random_tensor(128, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n) * 128 * 128);
}

template <pila::Tensor (*Kernel)(const pila::Tensor&, const pila::Tensor&)>
void BM_matmul_tn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor(n, 128, 3);
  const auto b = random_tensor(n, 128, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
}

template <pila::Tensor (*Kernel)(const pila::Tensor&, const pila::mogi::StationGeometry&, double)>
void BM_mogi_batch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const pila::mogi::VariableBounds bounds;
  const auto geom = pila::mogi::StationGeometry::random_layout(12, bounds, pila::CounterRng(5));
  pila::CounterRng rng(6);
  pila::Tensor params(n, 4);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 4; ++k) params(i, k) = rng.uniform(bounds[k].min, bounds[k].max);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(params, geom, 0.25));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

}  // namespace

namespace pm = pila::mogi;
namespace pk = pila::kernels;

BENCHMARK(BM_matmul<pk::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_matmul<pk::omp::matmul>)->Name("matmul/omp")->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_matmul_tn<pk::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_matmul_tn<pk::omp::matmul_tn>)->Name("matmul_tn/omp")->Arg(64)->Arg(1024);
BENCHMARK(BM_mogi_batch<pm::serial::forward_batch>)->Name("mogi_batch/serial")->Arg(1400)->Arg(100000);
BENCHMARK(BM_mogi_batch<pm::omp::forward_batch>)->Name("mogi_batch/omp")->Arg(1400)->Arg(100000);

BENCHMARK_MAIN();
