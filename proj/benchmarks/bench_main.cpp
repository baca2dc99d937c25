#include <benchmark/benchmark.h>

#include "msc/interval.hpp"

using namespace msc;

static void bm_interval_mul(benchmark::State& state) {
    Interval a(Dyadic::from_double(1.25), Dyadic::from_double(1.75));
    Interval b(Dyadic::from_double(-0.5), Dyadic::from_double(2.0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(a * b);
    }
}
BENCHMARK(bm_interval_mul);

static void bm_interval_sin(benchmark::State& state) {
    Interval a(Dyadic::from_double(0.5), Dyadic::from_double(0.625));
    for (auto _ : state) {
        benchmark::DoNotOptimize(iv_sin(a, 64));
    }
}
BENCHMARK(bm_interval_sin);

BENCHMARK_MAIN();
