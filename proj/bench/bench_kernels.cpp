#include "stfm/factor.hpp"
#include "stfm/kernels.hpp"
#include "stfm/simgen.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace stfm;

namespace {

Slices random_slices(std::size_t T, Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Slices out(T, Matrix(rows, cols));
  for (auto& m : out) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = nd(rng);
  }
  return out;
}

void BM_CrossRow(benchmark::State& state) {
  const auto n = state.range(0);
  const auto y1 = random_slices(240, n / 2, 40);
  const auto y2 = random_slices(240, n / 2, 40);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cross_row_aggregate(y1, y2));
}

void BM_CrossRowSerial(benchmark::State& state) {
  const auto n = state.range(0);
  const auto y1 = random_slices(240, n / 2, 40);
  const auto y2 = random_slices(240, n / 2, 40);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::cross_row_aggregate(y1, y2));
}

void BM_CrossCol(benchmark::State& state) {
  const auto n = state.range(0);
  const auto y1 = random_slices(240, n / 2, 40);
  const auto y2 = random_slices(240, n / 2, 40);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cross_col_aggregate(y1, y2));
}

void BM_CrossColSerial(benchmark::State& state) {
  const auto n = state.range(0);
  const auto y1 = random_slices(240, n / 2, 40);
  const auto y2 = random_slices(240, n / 2, 40);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::cross_col_aggregate(y1, y2));
}

void BM_Fit(benchmark::State& state) {
  SimConfig c;
  c.n = static_cast<std::size_t>(state.range(0));
  const auto sim = generate(c);
  for (auto _ : state) benchmark::DoNotOptimize(fit(sim.data, FitOptions{}));
}

}  // namespace

BENCHMARK(BM_CrossRow)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossRowSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossCol)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossColSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fit)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
