#include "ftle/models.hpp"
#include "ftle/otd.hpp"
#include "ftle/tangent.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace ftle;

const IntegratorConfig kCfg{0.0, 1.0, 0.01};

void BM_FullFtleBanded(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const auto sys = make_random_stable_banded(n, 1, static_cast<std::uint64_t>(n));
    const State z0 = State::Ones(n);
    for (auto _ : state) {
        const auto dg = deformation_gradient_variational(sys, z0, kCfg);
        benchmark::DoNotOptimize(ftle::ftle(cauchy_green(dg.matrix, StrainSide::right), kCfg.horizon, 1).exponents(0));
    }
    state.counters["equations"] = static_cast<double>(full_equation_count(n));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FullFtleBanded)->RangeMultiplier(2)->Range(50, 400)->Complexity()->Unit(benchmark::kMillisecond);

void BM_ReducedFtleBanded(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const auto r = static_cast<Eigen::Index>(state.range(1));
    const auto sys = make_random_stable_banded(n, 1, static_cast<std::uint64_t>(n));
    const State z0 = State::Ones(n);
    PipelineOptions options;
    options.initial_modes = Matrix::Identity(n, r);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduced_ftle_pipeline(sys, z0, r, kCfg, options).exponents(0));
    }
    state.counters["equations"] = static_cast<double>(reduced_equation_count(n, r));
}
BENCHMARK(BM_ReducedFtleBanded)->ArgsProduct({{50, 100, 200, 400}, {1, 2}})->Unit(benchmark::kMillisecond);

// Arg 0 is the finite-difference full computation; 1 and 2 are OTD ranks.
void BM_AbcPoint(benchmark::State& state) {
    const AbcFlow abc;
    const State z0 = (State(3) << 2.0, 0.6, 0.0).finished();
    const IntegratorConfig cfg{0.0, 8.0, 0.01};
    const auto r = static_cast<Eigen::Index>(state.range(0));
    for (auto _ : state) {
        if (r > 0) {
            benchmark::DoNotOptimize(reduced_ftle_pipeline(abc, z0, r, cfg).exponents(0));
        } else {
            benchmark::DoNotOptimize(deformation_gradient_fd(abc, z0, cfg).matrix(0, 0));
        }
    }
}
BENCHMARK(BM_AbcPoint)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
