#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convocode/transcript.hpp"

namespace convocode {

/// Sentence-level PAD score anchored at the utterance midpoint. Only the
/// pleasure dimension is analyzed; arousal and dominance are carried when
/// the scorer provides them.
struct SentenceEmotion {
    int utterance_id = 0;
    std::int64_t time_ms = 0;
    double pleasure = 0.0;
    std::optional<double> arousal;
    std::optional<double> dominance;
};

struct PadScore {
    double pleasure = 0.0;
    std::optional<double> arousal;
    std::optional<double> dominance;
};

/// Pluggable sentence scorer: one PadScore per input text, same order.
class EmotionScorer {
public:
    virtual ~EmotionScorer() = default;
    virtual std::vector<PadScore> score_texts(const std::vector<std::string>& texts) = 0;
};

/// Deterministic table-driven scorer for tests; unknown texts fall back to
/// a configurable default.
class FixtureEmotionScorer : public EmotionScorer {
public:
    explicit FixtureEmotionScorer(std::map<std::string, PadScore> table,
                                  std::optional<PadScore> fallback = std::nullopt)
        : table_(std::move(table)), fallback_(fallback) {}

    std::vector<PadScore> score_texts(const std::vector<std::string>& texts) override;

private:
    std::map<std::string, PadScore> table_;
    std::optional<PadScore> fallback_;
};

/// Deterministic stand-in scorer for offline runs: pleasure in [1, 5]
/// derived from a stable hash of the text, so repeated runs are
/// bit-identical.
class HashEmotionScorer : public EmotionScorer {
public:
    std::vector<PadScore> score_texts(const std::vector<std::string>& texts) override;
};

/// Drops utterances lacking semantic clarity, operationalized as trimmed
/// content shorter than min_content_chars Unicode code points. Order is
/// preserved.
std::vector<Utterance> filter_scorable(const std::vector<Utterance>& utterances,
                                       int min_content_chars = 4);

/// Number of Unicode code points in the whitespace-trimmed content.
std::size_t content_length(const std::string& content);

/// One SentenceEmotion per utterance, time at the span midpoint. Throws
/// ContractError when the scorer returns the wrong number of scores.
std::vector<SentenceEmotion> score_sentences(const std::vector<Utterance>& utterances,
                                             EmotionScorer& scorer);

struct BinPoint {
    std::int64_t bin_index = 0;
    double mean = 0.0;
    std::size_t count = 0;
};

/// Mean pleasure per fixed-width time bin; empty bins are absent, not
/// zero-filled.
struct BinnedSeries {
    std::int64_t bin_width_ms = 15000;
    std::vector<BinPoint> values;
    std::string session_id;
};

BinnedSeries bin_series(const std::vector<SentenceEmotion>& scores,
                        std::int64_t bin_width_ms = 15000, std::string session_id = {});

/// Keeps scores with time_ms < duration_ms. Sessions shorter than the
/// window pass through unchanged; idempotent.
std::vector<SentenceEmotion> window_first(std::vector<SentenceEmotion> scores,
                                          std::int64_t duration_ms = 600000);

/// Keeps bins that start before duration_ms.
BinnedSeries window_first(BinnedSeries series, std::int64_t duration_ms = 600000);

struct TimeValue {
    double t = 0.0;
    double value = 0.0;

    friend bool operator==(const TimeValue&, const TimeValue&) = default;
};

struct SmoothConfig {
    double frac = 0.1;  // fraction of points per local window
    int degree = 1;     // local linear only
};

/// Standard LOESS: at each point, a tricube-weighted local linear fit over
/// the ceil(frac*n) nearest points (window clamped to >= 2), no robustness
/// iterations. Output is sorted by (t, value); the result is invariant
/// under permutations of the input. Throws DomainError for n < 2 or an
/// out-of-range frac.
std::vector<TimeValue> loess_smooth(const std::vector<TimeValue>& points,
                                    const SmoothConfig& config = {});

struct BandPoint {
    double t = 0.0;
    double mean = 0.0;
    std::optional<double> standard_error;  // absent when only one session contributes
    std::size_t n_sessions = 0;
};

using BandSeries = std::vector<BandPoint>;

/// Interpolates each session's smoothed curve onto the grid and reports the
/// cross-session mean and sample standard error (sd/sqrt(n)) per grid
/// point. Grid points no session covers are omitted; single-contributor
/// points carry n = 1 and no standard error.
BandSeries band_across_sessions(const std::vector<std::vector<TimeValue>>& session_curves,
                                const std::vector<double>& grid);

// --- persistence -------------------------------------------------------------

void store_scores(const std::vector<SentenceEmotion>& scores, const std::filesystem::path& path);
std::vector<SentenceEmotion> load_scores(const std::filesystem::path& path);

}  // namespace convocode
