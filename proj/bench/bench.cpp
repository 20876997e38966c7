// Serial reference vs OpenMP for the three parallel kernels:
//   f-extremum lattice scan, the T mat-vec, and multistart seeds.
// Run: build/bench/conekit_bench [--benchmark_filter=...]

#include "conekit/index.hpp"
#include "conekit/solver.hpp"

#include <fstream>

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace conekit;

namespace {

const ProblemDef& sampled_example() {
    static const ProblemDef p = [] {
        auto doc = nlohmann::json::parse(std::ifstream(std::string(CONEKIT_SOURCE_DIR) + "/problems/example.json"));
        doc.erase("f_bounds");
        return load_json(doc);
    }();
    return p;
}

Box unit_box() {
    const Scalar zero(Rational(0)), one(Rational(1));
    return {{zero, one}, {zero, one}, {zero, one}};
}

void BM_FExtremumSerial(benchmark::State& state) {
    const auto& p = sampled_example();
    const int grid = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(f_extremum_serial(p, 0, unit_box(), ExtremumMode::max, Scalar(Rational(1)), grid));
}

void BM_FExtremumParallel(benchmark::State& state) {
    const auto& p = sampled_example();
    const int grid = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(f_extremum(p, 0, unit_box(), ExtremumMode::max, Scalar(Rational(1)), grid));
}

template <bool Parallel>
void BM_Apply(benchmark::State& state) {
    const auto& p = sampled_example();
    auto d = make_discretization(p, static_cast<int>(state.range(0)));
    auto u = GridFunction::constant(d.nodes(), 1.0);
    for (auto _ : state) {
        if constexpr (Parallel)
            benchmark::DoNotOptimize(d.apply(u, u));
        else
            benchmark::DoNotOptimize(d.apply_serial(u, u));
    }
}

/// Multistart has no separate serial code path: one thread is the reference.
void BM_Multistart(benchmark::State& state) {
    const auto& p = sampled_example();
    auto k = compute_all(p);
    auto d = make_discretization(p, 65);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(multistart(d, k, {{0, 1}, {1, 100}}, 4, SolveOptions{}));
    omp_set_num_threads(saved);
}

}  // namespace

BENCHMARK(BM_FExtremumSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FExtremumParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Apply<false>)->Arg(129)->Arg(257)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Apply<true>)->Arg(129)->Arg(257)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Multistart)->Arg(1)->Arg(omp_get_num_procs())->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
