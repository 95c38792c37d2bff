#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "convocode/errors.hpp"
#include "convocode/store.hpp"
#include "convocode/transcript.hpp"
#include "test_util.hpp"

using namespace convocode;
using test_util::seg;
using test_util::utt;

namespace {

std::size_t content_chars(const Transcript& t) {
    std::size_t total = 0;
    for (const auto& u : t.utterances)
        for (char c : u.content)
            if (c != ' ') ++total;
    return total;
}

std::size_t content_chars(const std::vector<TimedSegment>& segments) {
    std::size_t total = 0;
    for (const auto& s : segments)
        for (char c : s.text)
            if (c != ' ') ++total;
    return total;
}

}  // namespace

TEST_CASE("segment_by_pause merges within threshold and splits beyond it") {
    // Four same-speaker segments with gaps 1000 / 2500 / 1900 ms.
    const std::vector<TimedSegment> segments = {
        seg(0, 1000, "Speaker 1", "a"),
        seg(2000, 3000, "Speaker 1", "b"),
        seg(5500, 6500, "Speaker 1", "c"),
        seg(8400, 9000, "Speaker 1", "d"),
    };
    const Transcript t = segment_by_pause(segments, {2000});
    REQUIRE(t.size() == 2);
    CHECK(t.utterances[0].content == "a b");
    CHECK(t.utterances[0].start_ms == 0);
    CHECK(t.utterances[0].end_ms == 3000);
    CHECK(t.utterances[1].content == "c d");
    CHECK(t.utterances[1].id == 2);
}

TEST_CASE("segment_by_pause single segment is the identity") {
    const Transcript t = segment_by_pause({seg(100, 900, "Speaker 2", "hello there")}, {2000});
    REQUIRE(t.size() == 1);
    CHECK(t.utterances[0] == utt(1, "Speaker 2", 100, 900, "hello there"));
}

TEST_CASE("segment_by_pause splits on speaker change regardless of gap") {
    const Transcript t = segment_by_pause(
        {seg(0, 1000, "Speaker 1", "question"), seg(1800, 2600, "Speaker 2", "answer")}, {2000});
    REQUIRE(t.size() == 2);
    CHECK(t.utterances[0].speaker_label == "Speaker 1");
    CHECK(t.utterances[1].speaker_label == "Speaker 2");
}

TEST_CASE("segment_by_pause rejects unsorted input and empty input is empty") {
    CHECK_THROWS_AS(segment_by_pause({seg(5000, 6000, "Speaker 1", "x"),
                                      seg(0, 1000, "Speaker 1", "y")},
                                     {2000}),
                    DomainError);
    CHECK(segment_by_pause({}, {2000}).empty());
    CHECK_THROWS_AS(segment_by_pause({}, {0}), DomainError);
}

TEST_CASE("segment_by_pause is idempotent on its own output") {
    const auto sessions = test_util::fixture_sessions();
    for (const auto& session : sessions) {
        const Transcript once = segment_by_pause(session.segments, {2000});
        std::vector<TimedSegment> as_segments;
        for (const auto& u : once.utterances)
            as_segments.push_back(seg(u.start_ms, u.end_ms, u.speaker_label, u.content));
        const Transcript twice = segment_by_pause(as_segments, {2000});
        CHECK(once == twice);
    }
}

TEST_CASE("segment_by_pause preserves total non-space character count") {
    const auto sessions = test_util::fixture_sessions();
    for (const auto& session : sessions) {
        const Transcript t = segment_by_pause(session.segments, {2000});
        CHECK(content_chars(t) == content_chars(session.segments));
    }
}

TEST_CASE("segment_by_pause limit thresholds") {
    const std::vector<TimedSegment> run = {
        seg(0, 1000, "Speaker 1", "a"),
        seg(10000, 11000, "Speaker 1", "b"),
        seg(50000, 51000, "Speaker 1", "c"),
        seg(51500, 52000, "Speaker 2", "d"),
    };
    // Effectively infinite threshold: one utterance per maximal same-speaker run.
    const Transcript wide = segment_by_pause(run, {std::int64_t{1} << 40});
    REQUIRE(wide.size() == 2);
    CHECK(wide.utterances[0].content == "a b c");

    // 1 ms threshold: every segment on its own (gaps here all exceed 1 ms).
    const Transcript narrow = segment_by_pause(run, {1});
    CHECK(narrow.size() == 4);
}

TEST_CASE("merge_recordings merges on the absolute timeline") {
    Transcript first;
    first.utterances = {utt(1, "Speaker 1", 0, 1000, "a"), utt(2, "Speaker 2", 1500, 2000, "b"),
                        utt(3, "Speaker 1", 2500, 3000, "c")};
    Transcript second;
    second.utterances = {utt(1, "Speaker 1", 0, 800, "d"), utt(2, "Speaker 2", 1200, 1600, "e")};

    const MergeResult merged = merge_recordings(
        {{first, 0, "rec-1"}, {second, 10000, "rec-2"}});
    REQUIRE(merged.transcript.size() == 5);
    CHECK(merged.report.empty());
    for (int i = 0; i < 5; ++i) CHECK(merged.transcript.utterances[i].id == i + 1);
    CHECK(merged.transcript.utterances[3].content == "d");
    CHECK(merged.transcript.utterances[3].start_ms == 10000);
    CHECK(merged.transcript.source_recording_ids ==
          std::vector<std::string>{"rec-1", "rec-2"});
    CHECK(validate_transcript(merged.transcript).empty());
}

TEST_CASE("merge_recordings identity and vacuous cases") {
    Transcript only;
    only.utterances = {utt(1, "Speaker 1", 0, 1000, "a"), utt(2, "Speaker 2", 1500, 2000, "b")};
    const MergeResult merged = merge_recordings({{only, 0, ""}});
    CHECK(merged.transcript == only);

    CHECK(merge_recordings({}).transcript.empty());
}

TEST_CASE("merge_recordings warns on overlapping recordings") {
    Transcript first;
    first.utterances = {utt(1, "Speaker 1", 0, 5000, "a")};
    Transcript second;
    second.utterances = {utt(1, "Speaker 2", 0, 1000, "b")};

    const MergeResult merged = merge_recordings(
        {{first, 0, "rec-1"}, {second, 2000, "rec-2"}});
    REQUIRE(merged.report.findings.size() == 1);
    CHECK(merged.report.findings[0].severity == Severity::warning);
    CHECK(merged.report.findings[0].message.find("overlap") != std::string::npos);
    REQUIRE(merged.transcript.size() == 2);
    CHECK(merged.transcript.utterances[0].content == "a");
}

TEST_CASE("validate_transcript reports id gaps") {
    Transcript t;
    t.utterances = {utt(1, "Speaker 1", 0, 100, "a"), utt(2, "Speaker 1", 200, 300, "b"),
                    utt(4, "Speaker 1", 400, 500, "c")};
    const ValidationReport report = validate_transcript(t);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].message == "id gap after 2");
}

TEST_CASE("validate_transcript accepts a well-formed transcript") {
    CHECK(validate_transcript(test_util::fixture_session_a().expected_transcript).empty());
}

TEST_CASE("validate_transcript reports reversed spans naming the id") {
    Transcript t;
    t.utterances = {utt(1, "Speaker 1", 500, 100, "a")};
    const ValidationReport report = validate_transcript(t);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].message.find("end_ms < start_ms") != std::string::npos);
    CHECK(report.findings[0].message.find('1') != std::string::npos);
}

TEST_CASE("session store round-trips a full record") {
    test_util::TempDir tmp("store");
    SessionRecord record;
    record.participant_id = "P32";
    record.session_date = "2024-04-11";
    record.transcript = test_util::fixture_session_a().expected_transcript;
    record.survey = SurveyResponse{{4, 2, 4}, {3, 4, 2}};
    RoleMap roles;
    roles.assignments = {{"Speaker 1", Role::parent}, {"Speaker 2", Role::child}};
    record.role_map = roles;

    const auto dir = tmp.path() / "P32_2024-04-11";
    store_session(record, dir);
    const SessionRecord loaded = load_session(dir);
    CHECK(loaded.participant_id == record.participant_id);
    CHECK(loaded.session_date == record.session_date);
    CHECK(loaded.transcript == record.transcript);
    CHECK(loaded.survey == record.survey);
    CHECK(loaded.role_map == record.role_map);
}

TEST_CASE("session store leaves survey absent when the file is missing") {
    test_util::TempDir tmp("store");
    const auto dir = tmp.path() / "P1_2024-05-01";
    std::filesystem::create_directories(dir);
    store_transcript(test_util::fixture_session_b().expected_transcript,
                     dir / "transcript.json");
    const SessionRecord loaded = load_session(dir);
    CHECK_FALSE(loaded.survey.has_value());
    CHECK_FALSE(loaded.role_map.has_value());
}

TEST_CASE("truncated transcript file raises a parse error naming the byte offset") {
    test_util::TempDir tmp("store");
    const auto dir = tmp.path() / "P2_2024-05-02";
    test_util::spit(dir / "transcript.json", "[{\"id\": 1, \"speaker\": \"Speaker 1\",");
    try {
        load_session(dir);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("segments file round-trips") {
    test_util::TempDir tmp("segments");
    const auto path = tmp.path() / "segments.json";
    const auto original = test_util::fixture_session_c().segments;
    store_segments(original, path);
    CHECK(load_segments(path) == original);
}

TEST_CASE("segments without timestamps are refused at load") {
    test_util::TempDir tmp("segments");
    const auto path = tmp.path() / "segments.json";
    test_util::spit(path, R"json([{"speaker": "Speaker 1", "text": "no times"}])json");
    CHECK_THROWS(load_segments(path));
}
