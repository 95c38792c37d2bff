#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "convocode/emotion.hpp"

using convocode::SmoothConfig;
using convocode::TimeValue;

namespace {

std::vector<TimeValue> make_series(std::size_t n) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> noise(-0.5, 0.5);
    std::vector<TimeValue> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        points.push_back({static_cast<double>(i) * 15.0, std::sin(i * 0.05) + noise(rng)});
    return points;
}

}  // namespace

static void BM_LoessSmooth(benchmark::State& state) {
    const auto points = make_series(static_cast<std::size_t>(state.range(0)));
    const SmoothConfig config{0.1, 1};
    for (auto _ : state) {
        auto smoothed = convocode::loess_smooth(points, config);
        benchmark::DoNotOptimize(smoothed);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LoessSmooth)->Range(64, 4096)->Complexity();

static void BM_BinSeries(benchmark::State& state) {
    std::mt19937 rng(23);
    std::vector<convocode::SentenceEmotion> scores(static_cast<std::size_t>(state.range(0)));
    for (auto& s : scores) {
        s.time_ms = static_cast<std::int64_t>(rng() % 3000000);
        s.pleasure = 1.0 + (rng() % 400) / 100.0;
    }
    for (auto _ : state) {
        auto series = convocode::bin_series(scores, 15000);
        benchmark::DoNotOptimize(series);
    }
}
BENCHMARK(BM_BinSeries)->Range(256, 16384);

BENCHMARK_MAIN();
