#include "qsdkit/catalog.hpp"
#include "qsdkit/extinction.hpp"
#include "qsdkit/oracle.hpp"
#include "qsdkit/wkb.hpp"

#include <benchmark/benchmark.h>

using namespace qsd;

namespace {

void BM_RateEval(benchmark::State& state) {
    auto m = catalog("competition");
    Vector y(2);
    y << 0.4, 0.7;
    for (auto _ : state) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.num_jumps(); ++j) s += m.rate(j, y);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_RateEval);

void BM_Theta(benchmark::State& state) {
    WkbEngine e(catalog("competition"));
    Vector y(2);
    y << 0.4, 0.7;
    for (auto _ : state) benchmark::DoNotOptimize(e.field().theta(y));
}
BENCHMARK(BM_Theta);

void BM_PotentialV(benchmark::State& state) {
    WkbEngine e(catalog("bc23_bd"));
    Vector y(2);
    y << 0.1, 0.9;
    for (auto _ : state) benchmark::DoNotOptimize(e.potential_V(y));
}
BENCHMARK(BM_PotentialV);

void BM_EngineBuild(benchmark::State& state) {
    auto m = catalog("competition");
    for (auto _ : state) {
        WkbEngine e(m);
        benchmark::DoNotOptimize(e.V_at_origin());
    }
}
BENCHMARK(BM_EngineBuild)->Unit(benchmark::kMillisecond);

void BM_TauAsymptotic(benchmark::State& state) {
    WkbEngine e(catalog("sis_hetero"));
    for (auto _ : state) benchmark::DoNotOptimize(tau_asymptotic(e, 100).log_tau);
}
BENCHMARK(BM_TauAsymptotic);

void BM_ExactQsdSis(benchmark::State& state) {
    auto m = catalog("sis1d");
    for (auto _ : state) benchmark::DoNotOptimize(exact_qsd(m, state.range(0)).log_tau);
}
BENCHMARK(BM_ExactQsdSis)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_ExactQsdLattice(benchmark::State& state) {
    auto m = catalog("linear_birth_quadratic_death");
    for (auto _ : state) benchmark::DoNotOptimize(exact_qsd(m, 10).log_tau);
}
BENCHMARK(BM_ExactQsdLattice)->Unit(benchmark::kMillisecond);

void BM_Gillespie(benchmark::State& state) {
    auto m = catalog("sis1d");
    auto init = InitialDistribution::point({10});
    SimOptions o;
    o.threads = 1;
    o.keep_times = false;
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(gillespie_extinction(m, 20, init, 100, seed++, o).mean);
}
BENCHMARK(BM_Gillespie)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
