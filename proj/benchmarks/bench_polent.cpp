#include <benchmark/benchmark.h>

#include <polent/engine.hpp>
#include <polent/scenario.hpp>
#include <polent/servo.hpp>

#include <algorithm>
#include <numbers>
#include <random>
#include <vector>

namespace {

std::vector<double> sorted_uniform(std::size_t n, double span, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, span);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  std::sort(v.begin(), v.end());
  return v;
}

void BM_BuildHistogram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  // 1e5 counts/s per detector
  const double span = static_cast<double>(n) * 1e4;
  const auto a = sorted_uniform(n, span, 1);
  const auto b = sorted_uniform(n, span, 2);
  for (auto _ : state) benchmark::DoNotOptimize(polent::build_histogram(a, b, 0.01, 100.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_BuildHistogram)->Range(1 << 12, 1 << 20);

void BM_CountCoincidences(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = sorted_uniform(n, static_cast<double>(n) * 1e4, 3);
  const auto b = sorted_uniform(n, static_cast<double>(n) * 1e4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(polent::count_coincidences(a, b, {-0.5, 0.5}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_CountCoincidences)->Range(1 << 12, 1 << 20);

void BM_MonteCarloSetting(benchmark::State& state) {
  const polent::SetupModel s = polent::preset("fig5_25MHz").setup();
  const auto m = polent::MeasurementSetting::with(polent::AnalyzerSetting(std::numbers::pi / 8),
                                                  polent::AnalyzerSetting(std::numbers::pi / 8));
  polent::McOptions o;
  o.duration_s = 0.1;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    o.seed = seed++;
    benchmark::DoNotOptimize(polent::run_monte_carlo(s, m, o));
  }
}
BENCHMARK(BM_MonteCarloSetting)->Unit(benchmark::kMillisecond);

void BM_AnalyticRates(benchmark::State& state) {
  const polent::SetupModel s = polent::preset("table1_540MHz").setup();
  const auto m = polent::MeasurementSetting::with(polent::AnalyzerSetting(0.0), polent::AnalyzerSetting(0.3));
  for (auto _ : state) benchmark::DoNotOptimize(polent::analytic_rates(s, m));
}
BENCHMARK(BM_AnalyticRates)->Unit(benchmark::kMicrosecond);

void BM_ServoLoop(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        polent::simulate_closed_loop(polent::DriftModel{}, polent::ServoSpec::tuned(), 0.0, 1.0, seed++));
  state.SetItemsProcessed(state.iterations() * 50000);
}
BENCHMARK(BM_ServoLoop)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
