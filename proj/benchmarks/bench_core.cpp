#include <benchmark/benchmark.h>

#include "metaselect/analytic.hpp"
#include "metaselect/harness.hpp"
#include "metaselect/simulate.hpp"

namespace {

using namespace metaselect;

ConditionGrid two_factor_grid() {
  return build_grid({Factor::integer_levels("f1", 5), Factor::integer_levels("f2", 5)});
}

GroundTruth curved_truth(const ConditionGrid& grid) {
  return preset_oud_like(grid, 2400.0, -12.0, -4.0, 0.5, 100.0);
}

void BM_NormalDraws(benchmark::State& state) {
  NormalStream stream(42);
  double sink = 0.0;
  for (auto _ : state) {
    sink += stream.next_normal(0.0, 1.0);
  }
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(BM_NormalDraws);

void BM_GenerateDataset(benchmark::State& state) {
  const ConditionGrid grid = two_factor_grid();
  const GroundTruth truth = curved_truth(grid);
  const Allocation allocation = allocate_equal(static_cast<int>(state.range(0)), grid);
  std::uint64_t rep = 0;
  for (auto _ : state) {
    const Dataset data = generate_dataset(truth, grid, allocation, SeedSpec{7, rep++});
    benchmark::DoNotOptimize(data.samples[0][0]);
  }
}
BENCHMARK(BM_GenerateDataset)->Arg(100)->Arg(1000)->Arg(6000);

void BM_FitOls(benchmark::State& state) {
  const ConditionGrid grid = two_factor_grid();
  const GroundTruth truth = curved_truth(grid);
  const Allocation allocation = allocate_equal(1000, grid);
  const Dataset data = generate_dataset(truth, grid, allocation, SeedSpec{7, 0});
  const ModelSpec model = builtin_model("model3");
  for (auto _ : state) {
    const FitResult fit = fit_ols(data, model);
    benchmark::DoNotOptimize(fit.predicted_means[0]);
  }
}
BENCHMARK(BM_FitOls);

void BM_ExactLinearMse(benchmark::State& state) {
  const ConditionGrid grid = two_factor_grid();
  const GroundTruth truth = curved_truth(grid);
  const ModelSpec model = builtin_model("model5");
  for (auto _ : state) {
    const MseBreakdown breakdown = exact_linear_mse(model, grid, truth, 1000);
    benchmark::DoNotOptimize(breakdown.total);
  }
}
BENCHMARK(BM_ExactLinearMse);

void BM_McMseCell(benchmark::State& state) {
  const ConditionGrid grid = two_factor_grid();
  const GroundTruth truth = curved_truth(grid);
  const ModelSpec model = builtin_model("model3");
  for (auto _ : state) {
    const McEstimate estimate =
        mc_mse(model, grid, truth, static_cast<int>(state.range(0)), 100, SeedSpec{7, 0});
    benchmark::DoNotOptimize(estimate.mean);
  }
}
BENCHMARK(BM_McMseCell)->Arg(1000)->Arg(6000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
