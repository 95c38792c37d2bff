#pragma once

#include <vector>

#include "convocode/gateway.hpp"
#include "convocode/transcript.hpp"
#include "convocode/validation.hpp"

namespace convocode {

/// Splits long transcripts into overlapping windows so a single completion
/// call stays within context limits.
struct ChunkPlan {
    int max_utterances_per_chunk = 40;
    int overlap_utterances = 1;
};

struct IdRange {
    int first = 0;
    int last = 0;

    friend bool operator==(const IdRange&, const IdRange&) = default;
};

/// Covers 1..N with ranges of at most max_utterances_per_chunk ids;
/// consecutive ranges overlap by exactly overlap_utterances. Empty
/// transcript yields an empty plan.
std::vector<IdRange> plan_chunks(const Transcript& t, const ChunkPlan& plan);

struct CorrectionResult {
    Transcript transcript;
    ValidationReport report;  // warnings for chunks that fell back to the original text
    int attempts_total = 0;
};

/// Runs the transcription-repair prompt chunk by chunk. Only utterance
/// content may change; ids, order, count, speaker labels and timestamps are
/// preserved. A chunk whose response fails id/count validation is retried
/// once and then left at the original text with a warning recorded
/// (minimal-intervention policy). Overlapping regions take the later
/// chunk's correction.
CorrectionResult correct_transcript(const Transcript& t, const Gateway& gateway,
                                    const TemplateSet& templates, const ChunkPlan& plan = {});

}  // namespace convocode
