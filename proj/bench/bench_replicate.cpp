// Serial reference vs OpenMP replication on representative workloads.
#include "ppcr/experiments.hpp"
#include "ppcr/network.hpp"
#include "ppcr/parallel.hpp"

#include <benchmark/benchmark.h>

using namespace ppcr;

namespace {

ExperimentSpec sweep_cell(MechanismKind kind) {
    ExperimentSpec s;
    s.scenario = Scenario::mech_sweep;
    s.seed = 1;
    s.reps = 512;
    s.theta = Vector::LinSpaced(5, -0.5, 0.5);
    s.H = UniformMatrixSpec{-1, 1, 10, 5, 42};
    s.grid = {1.0};
    s.mechanisms = {{kind}};
    return s;
}

Execution mode(const benchmark::State& st) { return st.range(0) == 0 ? Execution::serial : Execution::parallel; }

void BM_SweepGaussian(benchmark::State& st) {
    const ExperimentSpec spec = sweep_cell(MechanismKind::gaussian_optimal);
    for (auto _ : st) benchmark::DoNotOptimize(run_mech_sweep(spec, mode(st)));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(spec.reps));
}

void BM_SweepLaplaceMle(benchmark::State& st) {
    const ExperimentSpec spec = sweep_cell(MechanismKind::laplace_data);
    for (auto _ : st) benchmark::DoNotOptimize(run_mech_sweep(spec, mode(st)));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(spec.reps));
}

void BM_Consensus(benchmark::State& st) {
    ExperimentSpec s;
    s.scenario = Scenario::consensus;
    s.seed = 5;
    s.reps = 4096;
    s.graph = Graph::ring(8);
    s.budgets = {1.0};
    s.iterations = 200;
    for (auto _ : st) benchmark::DoNotOptimize(run_consensus_experiment(s, mode(st)));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.reps));
}

void BM_ReplicateStats(benchmark::State& st) {
    for (auto _ : st) {
        auto acc = replicate<ScalarStats>(1 << 16, 3, mode(st), [] { return ScalarStats{}; },
                                          [](std::size_t, RandomStream& rng, ScalarStats& a) {
                                              double s = 0;
                                              for (int i = 0; i < 64; ++i) s += rng.normal();
                                              a.add(s * s);
                                          });
        benchmark::DoNotOptimize(acc.mean());
    }
}

}  // namespace

// Arg 0: serial reference path, 1: OpenMP.
BENCHMARK(BM_SweepGaussian)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepLaplaceMle)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Consensus)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicateStats)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
