#include <benchmark/benchmark.h>

#include "gridshap/dataset.hpp"
#include "gridshap/dcflow.hpp"
#include "gridshap/gbtree.hpp"
#include "gridshap/network.hpp"
#include "gridshap/recovery.hpp"
#include "gridshap/shap.hpp"

using namespace gridshap;

namespace {

struct Fixture {
  Network net = builtin_case9();
  Dataset ds = sample_scenarios(net, 1001, 0.0, 500.0, 83);
  SplitResult parts = split(ds, 0.75, 83);
  Ensemble gbt = fit_gbt(parts.train, "4-5", TrainConfig{});
  LinearModel lin = fit_linear(parts.train, "4-5");
  BackgroundSet bg = BackgroundSet::subsample(parts.train, 200, 83);
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

static void BM_SolveDc(benchmark::State& state) {
  auto& f = fixture();
  const Eigen::Vector2d inj(120.0, 380.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_dc(f.net, inj));
  }
}
BENCHMARK(BM_SolveDc);

static void BM_AnalyticalPtdf(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytical_ptdf(f.net));
  }
}
BENCHMARK(BM_AnalyticalPtdf);

static void BM_SampleScenarios(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_scenarios(f.net, state.range(0), 0.0, 500.0, 7));
  }
}
BENCHMARK(BM_SampleScenarios)->Arg(100)->Arg(1001);

static void BM_FitGbt(benchmark::State& state) {
  auto& f = fixture();
  TrainConfig cfg;
  cfg.n_trees = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_gbt(f.parts.train, "4-5", cfg));
  }
}
BENCHMARK(BM_FitGbt)->Arg(500)->Arg(6000)->Unit(benchmark::kMillisecond);

static void BM_FitLinear(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_linear(f.parts.train, "4-5"));
  }
}
BENCHMARK(BM_FitLinear);

static void BM_ShapTreeRow(benchmark::State& state) {
  auto& f = fixture();
  const Eigen::Vector2d x(15.0, 267.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(shap_tree(f.gbt, x, f.bg));
  }
}
BENCHMARK(BM_ShapTreeRow)->Unit(benchmark::kMillisecond);

static void BM_ShapExactRow(benchmark::State& state) {
  auto& f = fixture();
  const Eigen::Vector2d x(15.0, 267.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(shap_exact(f.gbt, x, f.bg));
  }
}
BENCHMARK(BM_ShapExactRow)->Unit(benchmark::kMillisecond);

static void BM_ExplainDataset(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain_dataset(f.gbt, f.ds, f.bg));
  }
}
BENCHMARK(BM_ExplainDataset)->Unit(benchmark::kMillisecond);

static void BM_RecoverPtdf(benchmark::State& state) {
  auto& f = fixture();
  const ExplanationSet es = explain_dataset(f.lin, f.ds, f.bg);
  const ShapLibrary lib = build_library(es, f.ds);
  for (auto _ : state) {
    benchmark::DoNotOptimize(recover_ptdf(lib));
  }
}
BENCHMARK(BM_RecoverPtdf);

BENCHMARK_MAIN();
