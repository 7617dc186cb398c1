#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include <obsdyn/delay_representation.hpp>
#include <obsdyn/expm.hpp>
#include <obsdyn/krylov_closure.hpp>
#include <obsdyn/ode_engine.hpp>

using namespace obsdyn;

namespace {

Matrix normal(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> d(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
    return m;
}

LinearObservableSystem random_system(int n, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // Unit-order spectrum; raw standard-normal A overflows the power basis past n ~ 16.
    Matrix a = normal(rng, n, n) / std::sqrt(static_cast<double>(n));
    Matrix b = normal(rng, m, n);
    return {std::move(a), std::move(b)};
}

} // namespace

static void BM_Expm(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const Matrix a = normal(rng, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(expm(a));
}
BENCHMARK(BM_Expm)->Arg(2)->Arg(8)->Arg(32)->Arg(128);

static void BM_Closure(benchmark::State& state) {
    const auto sys = random_system(static_cast<int>(state.range(0)), 1, 2);
    for (auto _ : state) {
        const auto ladder = krylov_ladder(sys);
        benchmark::DoNotOptimize(closure_matrices(sys, ladder));
    }
}
BENCHMARK(BM_Closure)->Arg(4)->Arg(10)->Arg(40);

static void BM_DelayWeights(benchmark::State& state) {
    const auto sys = random_system(static_cast<int>(state.range(0)), 1, 3);
    const auto comp = companion_system(closure_matrices(sys, krylov_ladder(sys)));
    DelaySearchOptions opt;
    opt.h_max = 0.3 * (comp.r + 1);
    const auto delays = find_generic_delays(comp, opt);
    for (auto _ : state) benchmark::DoNotOptimize(delay_weights(comp, delays));
}
BENCHMARK(BM_DelayWeights)->Arg(2)->Arg(6);

static void BM_PropagateOscillatorDde(benchmark::State& state) {
    Matrix a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    Matrix b(1, 2);
    b << 1.0, 0.0;
    const LinearObservableSystem sys(a, b);
    const auto comp = companion_system(closure_matrices(sys, krylov_ladder(sys)));
    const auto dm = delay_weights(comp, std::vector<double>{0.0, 1.5});
    const double dt = dm.horizon() / 200.0;
    Vector u0(2);
    u0 << 1.0, 0.0;
    const auto hist = HistorySegment::sample(0.0, dm.horizon(), dt, [&](double t) { return linear_observable_at(sys, u0, t); });
    for (auto _ : state) benchmark::DoNotOptimize(propagate_dde(dm, hist, 10.0 * dm.horizon(), dt));
}
BENCHMARK(BM_PropagateOscillatorDde);
BENCHMARK_MAIN();
