#include <benchmark/benchmark.h>

#include "lisa/evidence.hpp"

namespace {

void BM_BetaLowerQuantile(benchmark::State& state) {
  const auto s = static_cast<std::int64_t>(state.range(0));
  const auto c = static_cast<std::int64_t>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lisa::evidence::beta_lower_quantile(s, c, 0.05));
  }
}
BENCHMARK(BM_BetaLowerQuantile)->Args({5, 0})->Args({15, 5})->Args({100, 30})->Args({5000, 5000});

void BM_RegularizedIncompleteBeta(benchmark::State& state) {
  const double a = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lisa::evidence::regularized_incomplete_beta(0.42, a, a / 3.0 + 1.0));
  }
}
BENCHMARK(BM_RegularizedIncompleteBeta)->Arg(2)->Arg(20)->Arg(200)->Arg(2000);

void BM_CalibrationTable(benchmark::State& state) {
  for (auto _ : state) {
    for (std::int64_t c = 0; c <= 5; ++c) {
      std::int64_t s = 0;
      while (lisa::evidence::beta_lower_quantile(s, c, 0.05) < 0.55) ++s;
      benchmark::DoNotOptimize(s);
    }
  }
}
BENCHMARK(BM_CalibrationTable);

}  // namespace
