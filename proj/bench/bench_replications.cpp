// Serial reference vs OpenMP replication runner, plus the per-step kernels
// that dominate a replication.

#include "npts/harness.hpp"
#include "npts/sampling.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace npts;

ExperimentConfig bench_config(int parallelism)
{
    ExperimentConfig cfg;
    cfg.scenario_name = "B";
    cfg.scenario = builtin_scenario("B");
    cfg.policy = NonparametricTS{};
    cfg.horizon = 200;
    cfg.replications = 8;
    cfg.base_seed = 1;
    cfg.parallelism = parallelism;
    return cfg;
}

void BM_ReplicationsSerial(benchmark::State& state)
{
    const auto cfg = bench_config(1);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_replications_serial(cfg));
    state.SetItemsProcessed(state.iterations() * cfg.replications);
}
BENCHMARK(BM_ReplicationsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ReplicationsParallel(benchmark::State& state)
{
    const auto cfg = bench_config(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(run_replications_parallel(cfg));
    state.SetItemsProcessed(state.iterations() * cfg.replications);
}
BENCHMARK(BM_ReplicationsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_GibbsSweep(benchmark::State& state)
{
    const auto n = static_cast<int>(state.range(0));
    Rng rng(2);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ArmState arm(PriorConfig{}.resolve(2), PYConfig{});
    GibbsConfig one{1e300, 1};
    for (int i = 0; i < n; ++i) {
        Vector x(2);
        x << u(rng), u(rng);
        arm.observe(x, (i % 3) * 2.0 * (x(0) + x(1)) + noise(rng), one, rng);
    }
    for (auto _ : state)
        arm.gibbs_sweep(rng);
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GibbsSweep)->Arg(50)->Arg(200)->Arg(500);

void BM_LogPredictive(benchmark::State& state)
{
    const NIGHyper h = PriorConfig{}.resolve(static_cast<int>(state.range(0)));
    Vector x = Vector::Constant(h.dim(), 0.3);
    double y = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(log_predictive(h, x, y));
        y += 1e-9;
    }
}
BENCHMARK(BM_LogPredictive)->Arg(2)->Arg(8);

} // namespace

BENCHMARK_MAIN();
