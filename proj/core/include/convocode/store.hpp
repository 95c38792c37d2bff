#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "convocode/annotation.hpp"
#include "convocode/stats.hpp"
#include "convocode/transcript.hpp"

namespace convocode {

/// One recorded homework session: participant, date, transcript, and the
/// optional survey/roles companions. Everything is immutable value data.
struct SessionRecord {
    std::string participant_id;  // e.g. "P32"
    std::string session_date;    // ISO date "2024-04-11"
    Transcript transcript;
    std::optional<SurveyResponse> survey;
    std::optional<RoleMap> role_map;
};

/// Session directory layout:
///   transcript.json   UTF-8 JSON array of {"id","speaker","start_ms","end_ms","content"}
///   survey.json       optional pre/post PAD survey
///   roles.json        optional speaker-label -> role map
///   behaviours.json   behaviour annotations
///   conflicts.json    conflict annotations
///   segments.json     optional raw diarized segments (ingest input)
///   scores.csv        optional sentence-level emotion scores
///   manifest.json     per-session provenance
///
/// Directory names follow "<participant>_<date>". Concurrent reads are
/// safe; writes to one session directory are single-writer.
struct SessionPaths {
    std::filesystem::path dir;

    std::filesystem::path transcript() const { return dir / "transcript.json"; }
    std::filesystem::path survey() const { return dir / "survey.json"; }
    std::filesystem::path roles() const { return dir / "roles.json"; }
    std::filesystem::path behaviours() const { return dir / "behaviours.json"; }
    std::filesystem::path conflicts() const { return dir / "conflicts.json"; }
    std::filesystem::path segments() const { return dir / "segments.json"; }
    std::filesystem::path scores() const { return dir / "scores.csv"; }
    std::filesystem::path manifest() const { return dir / "manifest.json"; }
};

void store_transcript(const Transcript& t, const std::filesystem::path& path);
Transcript load_transcript(const std::filesystem::path& path);

void store_segments(const std::vector<TimedSegment>& segments,
                    const std::filesystem::path& path);
std::vector<TimedSegment> load_segments(const std::filesystem::path& path);

/// Loads a full session from its directory. transcript.json is required;
/// survey.json and roles.json are optional and left absent when missing.
/// The participant id and date come from the directory name.
SessionRecord load_session(const std::filesystem::path& dir);

/// Stores a session; round-trips structurally (store then load yields an
/// equal record).
void store_session(const SessionRecord& record, const std::filesystem::path& dir);

/// Splits "<participant>_<date>" into its parts; returns false when the
/// name does not match.
bool parse_session_dir_name(const std::string& name, std::string& participant_id,
                            std::string& session_date);

/// Session directories directly under the corpus root, sorted by name.
std::vector<std::filesystem::path> list_session_dirs(const std::filesystem::path& corpus_root);

}  // namespace convocode
