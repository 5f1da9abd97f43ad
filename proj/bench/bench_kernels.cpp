// Serial reference vs OpenMP kernels. Run with --benchmark_filter=<name>.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "dtdft/kernels.hpp"

namespace {

using dtdft::Boundary;
using dtdft::kernels::Exec;

std::vector<double> field(std::size_t n, double shift) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.5 + std::sin(0.01 * static_cast<double>(i) + shift);
  return v;
}

template <Exec E>
void BM_Laplacian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = field(n, 0.0);
  std::vector<double> out(n);
  for (auto _ : state) {
    dtdft::kernels::laplacian(f, 0.1, Boundary::periodic, out, E);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <Exec E>
void BM_FluxDivergence(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto rho = field(n, 0.0);
  const auto mu = field(n, 1.0);
  std::vector<double> out(n);
  for (auto _ : state) {
    dtdft::kernels::flux_divergence(rho, mu, 0.1, Boundary::no_flux, 1.0, out, E);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <Exec E>
void BM_ConvolveDirect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = 1.0 / std::sqrt(0.04 + 0.01 * static_cast<double>(i * i));
  const auto src = field(n, 0.5);
  std::vector<double> out(n);
  for (auto _ : state) {
    dtdft::kernels::convolve_direct(k, src, Boundary::no_flux, out, E);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}

}  // namespace

BENCHMARK(BM_Laplacian<Exec::serial>)->RangeMultiplier(8)->Range(512, 1 << 21);
BENCHMARK(BM_Laplacian<Exec::parallel>)->RangeMultiplier(8)->Range(512, 1 << 21);
BENCHMARK(BM_FluxDivergence<Exec::serial>)->RangeMultiplier(8)->Range(512, 1 << 21);
BENCHMARK(BM_FluxDivergence<Exec::parallel>)->RangeMultiplier(8)->Range(512, 1 << 21);
BENCHMARK(BM_ConvolveDirect<Exec::serial>)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_ConvolveDirect<Exec::parallel>)->RangeMultiplier(4)->Range(256, 4096);

BENCHMARK_MAIN();
