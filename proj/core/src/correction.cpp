#include "convocode/correction.hpp"

#include <map>
#include <set>
#include <string>

#include "convocode/errors.hpp"

namespace convocode {

std::vector<IdRange> plan_chunks(const Transcript& t, const ChunkPlan& plan) {
    if (plan.max_utterances_per_chunk < 1)
        throw DomainError("plan_chunks: max_utterances_per_chunk must be >= 1");
    if (plan.overlap_utterances < 0 || plan.overlap_utterances >= plan.max_utterances_per_chunk)
        throw DomainError("plan_chunks: overlap must be in [0, max)");

    std::vector<IdRange> ranges;
    const int n = static_cast<int>(t.size());
    if (n == 0) return ranges;

    int first = 1;
    for (;;) {
        const int last = std::min(first + plan.max_utterances_per_chunk - 1, n);
        ranges.push_back({first, last});
        if (last == n) break;
        first = last - plan.overlap_utterances + 1;
    }
    return ranges;
}

namespace {

// A chunk response must echo exactly the ids it was given, once each.
bool ids_match(const std::vector<CorrectedRecord>& records, const IdRange& range) {
    if (records.size() != static_cast<std::size_t>(range.last - range.first + 1)) return false;
    std::set<int> seen;
    for (const auto& rec : records) {
        if (rec.id < range.first || rec.id > range.last) return false;
        if (!seen.insert(rec.id).second) return false;
    }
    return true;
}

}  // namespace

CorrectionResult correct_transcript(const Transcript& t, const Gateway& gateway,
                                    const TemplateSet& templates, const ChunkPlan& plan) {
    CorrectionResult result;
    result.transcript = t;
    const auto ranges = plan_chunks(t, plan);

    std::map<int, std::string> corrected;
    for (std::size_t ci = 0; ci < ranges.size(); ++ci) {
        const IdRange& range = ranges[ci];
        const std::string prompt = render_prompt(
            templates.transcription_fix, {{"transcript", render_records(t, range.first, range.last)}});

        bool applied = false;
        std::string failure = "malformed response";
        for (int attempt = 0; attempt < 2 && !applied; ++attempt) {
            try {
                const ChatExchange exchange = gateway.complete(prompt);
                result.attempts_total += exchange.attempt_count;
                const auto records = std::get<std::vector<CorrectedRecord>>(
                    extract_structured_block(exchange.raw_response, OutputShape::record_list));
                if (!ids_match(records, range)) {
                    failure = records.size() !=
                                      static_cast<std::size_t>(range.last - range.first + 1)
                                  ? "length mismatch"
                                  : "id mismatch";
                    continue;
                }
                for (const auto& rec : records) corrected[rec.id] = rec.content;
                applied = true;
            } catch (const ParseError&) {
                failure = "malformed response";
            }
        }
        if (!applied) {
            result.report.add(Severity::warning, failure + " chunk " + std::to_string(ci),
                              "chunk " + std::to_string(ci));
        }
    }

    for (auto& u : result.transcript.utterances) {
        const auto it = corrected.find(u.id);
        if (it != corrected.end()) u.content = it->second;
    }
    return result;
}

}  // namespace convocode
