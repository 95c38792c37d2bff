#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "convocode/correction.hpp"
#include "convocode/emotion.hpp"
#include "convocode/gateway.hpp"
#include "convocode/transcript.hpp"

namespace convocode {

/// Resolved configuration for a pipeline run. Loaded from a JSON config
/// file; CLI flags override individual fields.
struct PipelineConfig {
    std::filesystem::path corpus_root;
    std::filesystem::path codebook_path;
    std::filesystem::path templates_dir;
    std::filesystem::path out_dir;  // defaults to <corpus>/reports

    BackendConfig backend;
    SegmentationConfig segmentation;
    ChunkPlan chunking;
    int role_max_utterances = 0;  // 0 = whole transcript

    // emotion dynamics
    SmoothConfig smoothing;
    std::int64_t bin_width_ms = 15000;
    std::int64_t window_ms = 600000;
    int min_content_chars = 4;
    std::string emotion_scorer = "none";  // "none" (use stored scores.csv) or "hash"

    // analysis toggles
    bool enable_agreement = true;
    bool enable_emotions = true;
    std::string model_coder_id = "model";
    std::string arbitration_coder;  // empty: ties fail loudly

    int concurrency = 4;

    void validate() const;  // throws ConfigError

    static PipelineConfig from_file(const std::filesystem::path& path);
};

enum class Stage { ingest, correct, roles, code, agree, emotions, stats, report, run };

Stage parse_stage(const std::string& name);
const char* to_string(Stage s);

enum class SessionStatus { ok, warning, error };

const char* to_string(SessionStatus s);

struct SessionStatusEntry {
    std::string session;  // directory name
    SessionStatus status = SessionStatus::ok;
    std::size_t warning_count = 0;
    std::size_t error_count = 0;
    std::string message;
};

struct RunManifest {
    std::map<std::string, std::string> config_snapshot;
    std::string codebook_version;
    std::map<std::string, std::string> template_versions;
    std::vector<SessionStatusEntry> sessions;  // ordered by session name
    std::vector<std::string> report_files;    // emitted report file names
    std::vector<std::string> notes;           // analysis caveats
    std::size_t sessions_excluded_from_correlations = 0;
    double elapsed_seconds = 0.0;  // excluded from determinism comparisons

    std::size_t count(SessionStatus s) const;
};

/// Runs one stage (or the whole pipeline for Stage::run) over every session
/// in the corpus. Per-session failures are isolated; corpus-level analyses
/// run after all sessions complete. Throws ConfigError before any work when
/// the config is invalid; throws Error when no sessions are found.
RunManifest run_stage(const PipelineConfig& config, Stage stage);

inline RunManifest run_pipeline(const PipelineConfig& config) {
    return run_stage(config, Stage::run);
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace convocode
