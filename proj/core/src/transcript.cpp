#include "convocode/transcript.hpp"

#include <algorithm>
#include <string>

#include "convocode/errors.hpp"

namespace convocode {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

Transcript segment_by_pause(const std::vector<TimedSegment>& segments,
                            const SegmentationConfig& config) {
    if (config.pause_threshold_ms <= 0)
        throw DomainError("segment_by_pause: pause_threshold_ms must be positive");

    Transcript out;
    if (segments.empty()) return out;

    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (segments[i].start_ms < segments[i - 1].start_ms)
            throw DomainError("segment_by_pause: segments not sorted by start_ms (index " +
                              std::to_string(i) + ")");
    }

    for (const auto& seg : segments) {
        if (seg.end_ms < seg.start_ms)
            throw DomainError("segment_by_pause: segment end_ms < start_ms at start_ms " +
                              std::to_string(seg.start_ms));
        const std::string text = trim(seg.text);
        if (text.empty()) continue;

        const bool fresh =
            out.utterances.empty() ||
            out.utterances.back().speaker_label != seg.speaker_label ||
            seg.start_ms - out.utterances.back().end_ms > config.pause_threshold_ms;

        if (fresh) {
            Utterance u;
            u.id = static_cast<int>(out.utterances.size()) + 1;
            u.speaker_label = seg.speaker_label;
            u.start_ms = seg.start_ms;
            u.end_ms = seg.end_ms;
            u.content = text;
            out.utterances.push_back(std::move(u));
        } else {
            Utterance& u = out.utterances.back();
            u.end_ms = std::max(u.end_ms, seg.end_ms);
            u.content += ' ';
            u.content += text;
        }
    }
    return out;
}

MergeResult merge_recordings(const std::vector<RecordingSpan>& recordings) {
    MergeResult result;
    if (recordings.empty()) return result;

    // Detect overlap on the absolute timeline before flattening.
    struct Interval {
        std::int64_t begin, end;
        std::string id;
    };
    std::vector<Interval> intervals;
    intervals.reserve(recordings.size());
    for (const auto& rec : recordings) {
        std::int64_t begin = rec.start_offset_ms;
        std::int64_t end = rec.start_offset_ms;
        if (!rec.transcript.empty()) {
            begin += rec.transcript.utterances.front().start_ms;
            end += rec.transcript.utterances.back().end_ms;
        }
        intervals.push_back({begin, end, rec.recording_id});
    }
    std::vector<std::size_t> order(intervals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return intervals[a].begin < intervals[b].begin;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const auto& prev = intervals[order[k - 1]];
        const auto& cur = intervals[order[k]];
        if (cur.begin < prev.end) {
            result.report.add(Severity::warning,
                              "recordings overlap: \"" + cur.id + "\" starts before \"" +
                                  prev.id + "\" ends; ordering by start time",
                              "recording " + cur.id);
        }
    }

    std::vector<Utterance> merged;
    for (const auto& rec : recordings) {
        for (Utterance u : rec.transcript.utterances) {
            u.start_ms += rec.start_offset_ms;
            u.end_ms += rec.start_offset_ms;
            merged.push_back(std::move(u));
        }
        for (const auto& src : rec.transcript.source_recording_ids)
            result.transcript.source_recording_ids.push_back(src);
        if (!rec.recording_id.empty())
            result.transcript.source_recording_ids.push_back(rec.recording_id);
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const Utterance& a, const Utterance& b) { return a.start_ms < b.start_ms; });
    for (std::size_t i = 0; i < merged.size(); ++i) merged[i].id = static_cast<int>(i) + 1;
    result.transcript.utterances = std::move(merged);
    return result;
}

ValidationReport validate_transcript(const Transcript& t) {
    ValidationReport report;
    const auto& us = t.utterances;
    for (std::size_t i = 0; i < us.size(); ++i) {
        const Utterance& u = us[i];
        const std::string locus = "utterance " + std::to_string(u.id);
        if (u.id != static_cast<int>(i) + 1) {
            if (i > 0 && u.id > us[i - 1].id + 1) {
                report.add(Severity::error, "id gap after " + std::to_string(us[i - 1].id), locus);
            } else {
                report.add(Severity::error,
                           "id " + std::to_string(u.id) + " out of sequence at position " +
                               std::to_string(i + 1),
                           locus);
            }
        }
        if (u.end_ms < u.start_ms)
            report.add(Severity::error,
                       "end_ms < start_ms for utterance " + std::to_string(u.id), locus);
        if (trim(u.content).empty())
            report.add(Severity::error, "empty content at utterance " + std::to_string(u.id),
                       locus);
        if (i > 0 && u.start_ms < us[i - 1].start_ms)
            report.add(Severity::error,
                       "utterance " + std::to_string(u.id) + " starts before utterance " +
                           std::to_string(us[i - 1].id),
                       locus);
    }
    report.sort();
    return report;
}

}  // namespace convocode
