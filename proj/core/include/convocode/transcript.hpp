#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convocode/validation.hpp"

namespace convocode {

/// Raw diarized transcription unit as delivered by the ASR stage.
struct TimedSegment {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string speaker_label;
    std::string text;

    friend bool operator==(const TimedSegment&, const TimedSegment&) = default;
};

/// A contiguous same-speaker span of conversation. Ids are 1..N and strictly
/// increasing within a transcript.
struct Utterance {
    int id = 0;
    std::string speaker_label;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string content;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Transcript {
    std::vector<Utterance> utterances;
    std::vector<std::string> source_recording_ids;

    bool empty() const noexcept { return utterances.empty(); }
    std::size_t size() const noexcept { return utterances.size(); }

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct SegmentationConfig {
    /// Gaps longer than this split an utterance; speaker changes always split.
    std::int64_t pause_threshold_ms = 2000;
};

/// One recording placed on the session's absolute timeline.
struct RecordingSpan {
    Transcript transcript;
    std::int64_t start_offset_ms = 0;
    std::string recording_id;
};

struct MergeResult {
    Transcript transcript;
    ValidationReport report;
};

/// Merges consecutive segments into utterances: a new utterance starts when
/// the inter-segment gap exceeds the pause threshold or the speaker changes.
/// Merged content is joined with a single space; ids are renumbered 1..N.
/// Throws DomainError on unsorted input or a non-positive threshold; an empty
/// input yields an empty transcript.
Transcript segment_by_pause(const std::vector<TimedSegment>& segments,
                            const SegmentationConfig& config = {});

/// Re-orders utterances of several recordings onto one global timeline
/// (offset applied to every timestamp), renumbering ids 1..N. Overlapping
/// recordings produce a warning finding and are still ordered by start time.
MergeResult merge_recordings(const std::vector<RecordingSpan>& recordings);

/// Lists every violated transcript invariant (id gaps, disorder, reversed
/// spans, empty content). Never throws; a valid transcript yields an empty
/// report.
ValidationReport validate_transcript(const Transcript& t);

}  // namespace convocode
