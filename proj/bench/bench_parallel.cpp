// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the
// team size; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "partner/parallel.hpp"

using namespace partner;

namespace {

std::vector<JointAngles> random_angles(std::size_t n) {
    Rng rng(42);
    const JointLimitTable limits;
    std::vector<JointAngles> out(n);
    for (auto& a : out) {
        for (std::size_t i = 0; i < kJointCount; ++i) {
            a[i] = std::uniform_real_distribution<double>(limits[i].min, limits[i].max)(rng);
        }
    }
    return out;
}

template <bool Parallel>
void BM_ForwardKinematics(benchmark::State& state) {
    const auto angles = random_angles(static_cast<std::size_t>(state.range(0)));
    std::vector<Pose9> out(angles.size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            forward_kinematics_batch(angles, LinkLengths{}, FkVariant::AsPrinted, out);
        } else {
            forward_kinematics_batch_serial(angles, LinkLengths{}, FkVariant::AsPrinted, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_EvaluateBatch(benchmark::State& state) {
    const RobotModel model;
    const auto angles = random_angles(static_cast<std::size_t>(state.range(0)));
    std::vector<Chromosome> genes;
    for (const auto& a : angles) genes.push_back(a.q);
    const Objective obj(model, forward_kinematics(angles.front(), model.links));
    std::vector<double> costs(genes.size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            evaluate_batch(obj, genes, costs);
        } else {
            evaluate_batch_serial(obj, genes, costs);
        }
        benchmark::DoNotOptimize(costs.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SolveBatch(benchmark::State& state) {
    const RobotModel model;
    const auto angles = random_angles(static_cast<std::size_t>(state.range(0)));
    std::vector<Pose9> targets;
    for (const auto& a : angles) targets.push_back(forward_kinematics(a, model.links));
    BmaParams params;
    params.target_cost = 1e-6;
    for (auto _ : state) {
        auto reports = Parallel ? solve_batch(targets, params, model) : solve_batch_serial(targets, params, model);
        benchmark::DoNotOptimize(reports.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = Parallel ? parallel_threads() : 1;
}

}  // namespace

BENCHMARK(BM_ForwardKinematics<false>)->Name("fk_batch/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_ForwardKinematics<true>)->Name("fk_batch/openmp")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_EvaluateBatch<false>)->Name("evaluate_batch/serial")->Arg(9)->Arg(1 << 12);
BENCHMARK(BM_EvaluateBatch<true>)->Name("evaluate_batch/openmp")->Arg(9)->Arg(1 << 12);
BENCHMARK(BM_SolveBatch<false>)->Name("solve_batch/serial")->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveBatch<true>)->Name("solve_batch/openmp")->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
