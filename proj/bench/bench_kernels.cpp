// Serial reference kernels against their OpenMP counterparts. Run with
// --benchmark_filter to pick a kernel; thread counts are the last argument.

#include <benchmark/benchmark.h>

#include "beq/equilibrium.hpp"
#include "beq/gtable.hpp"
#include "beq/montecarlo.hpp"
#include "beq/verify.hpp"

namespace {

using namespace beq;

struct PathSetup {
  SimPlan plan;
  BetweennessPreference pref = BetweennessPreference::mixed_crra(DiscreteMeasure::make({-1.0, 0.5}, {0.5, 0.5}));
  std::vector<double> samples;

  PathSetup() {
    Vec mu(2);
    mu << 0.09, 0.05;
    Mat sigma(2, 2);
    sigma << 0.2, 0.0, 0.05, 0.15;
    const MarketModel model = MarketModel::constant(1.0, mu, sigma);
    const GTable table = build_G_table(pref, kDefaultYMax, 257, default_quadrature());
    static EquilibriumSolution sol = solve_constrained(table, model, ConvexSet::nonneg_orthant(2), 512);
    SimConfig cfg;
    plan = make_sim_plan(model, strategy_from_solution(sol), Problem::Constrained, 0.0, 1.0, cfg);
    samples = simulate_paths_serial(plan, 100000, 1);
  }
};

const PathSetup& setup() {
  static const PathSetup s;
  return s;
}

void BM_PathsSerial(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_paths_serial(s.plan, static_cast<int>(state.range(0)), 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PathsSerial)->Arg(20000)->Arg(100000)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_PathsParallel(benchmark::State& state) {
  const auto& s = setup();
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_paths_parallel(s.plan, static_cast<int>(state.range(0)), 7, threads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PathsParallel)->ArgsProduct({{20000, 100000}, {1, 2, 4}})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_MeanFSerial(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(mean_F_serial(s.pref, s.samples, 1.02));
}
BENCHMARK(BM_MeanFSerial)->UseRealTime()->Unit(benchmark::kMicrosecond);

void BM_MeanFParallel(benchmark::State& state) {
  const auto& s = setup();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mean_F_parallel(s.pref, s.samples, 1.02, threads));
}
BENCHMARK(BM_MeanFParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMicrosecond);

void BM_GTableSerial(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_G_table_serial(s.pref, kDefaultYMax, static_cast<int>(state.range(0)), default_quadrature()));
  }
}
BENCHMARK(BM_GTableSerial)->Arg(257)->Arg(1025)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_GTableParallel(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_G_table(s.pref, kDefaultYMax, static_cast<int>(state.range(0)), default_quadrature()));
  }
}
BENCHMARK(BM_GTableParallel)->Arg(257)->Arg(1025)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
