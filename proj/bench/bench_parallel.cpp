#include <benchmark/benchmark.h>

#include "okpz/kernel.hpp"
#include "okpz/solver.hpp"

namespace {

const okpz::BoundaryParams kRobin{1.0, 1.0};

void BM_KernelMcSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(okpz::kernel_mc_serial(kRobin, 0.25, 0.5, 0.5, 20000, 100, 1));
  }
}

void BM_KernelMcParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(okpz::kernel_mc(kRobin, 0.25, 0.5, 0.5, 20000, 100, 1));
  }
}

void BM_PropagatorSerial(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const okpz::GridSpec grid(m, 0.5 * okpz::GridSpec::max_dt(m, kRobin), 1.0, kRobin);
  const double t = 200 * grid.dt();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        okpz::propagator_serial(grid, kRobin, 0.0, t, okpz::NoisePlan::white(3)));
  }
}

void BM_PropagatorParallel(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const okpz::GridSpec grid(m, 0.5 * okpz::GridSpec::max_dt(m, kRobin), 1.0, kRobin);
  const double t = 200 * grid.dt();
  for (auto _ : state) {
    benchmark::DoNotOptimize(okpz::propagator(grid, kRobin, 0.0, t, okpz::NoisePlan::white(3)));
  }
}

}  // namespace

BENCHMARK(BM_KernelMcSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelMcParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PropagatorSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PropagatorParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
