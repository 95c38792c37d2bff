#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "convocode/transcript.hpp"

namespace {

std::vector<convocode::TimedSegment> make_segments(std::size_t n) {
    std::mt19937 rng(29);
    std::vector<convocode::TimedSegment> segments;
    segments.reserve(n);
    std::int64_t clock = 0;
    for (std::size_t i = 0; i < n; ++i) {
        convocode::TimedSegment s;
        s.start_ms = clock;
        s.end_ms = clock + 500 + rng() % 3000;
        s.speaker_label = (rng() % 3 == 0) ? "Speaker 2" : "Speaker 1";
        s.text = "segment text " + std::to_string(i);
        clock = s.end_ms + rng() % 4000;
        segments.push_back(std::move(s));
    }
    return segments;
}

}  // namespace

static void BM_SegmentByPause(benchmark::State& state) {
    const auto segments = make_segments(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto transcript = convocode::segment_by_pause(segments, {2000});
        benchmark::DoNotOptimize(transcript);
    }
}
BENCHMARK(BM_SegmentByPause)->Range(256, 16384);

static void BM_ValidateTranscript(benchmark::State& state) {
    const auto transcript =
        convocode::segment_by_pause(make_segments(static_cast<std::size_t>(state.range(0))),
                                    {2000});
    for (auto _ : state) {
        auto report = convocode::validate_transcript(transcript);
        benchmark::DoNotOptimize(report);
    }
}
BENCHMARK(BM_ValidateTranscript)->Range(256, 16384);

BENCHMARK_MAIN();
