#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include <json.hpp>

#include "convocode/csv.hpp"
#include "convocode/errors.hpp"
#include "convocode/pipeline.hpp"
#include "convocode/store.hpp"
#include "test_util.hpp"

using namespace convocode;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() { return fs::path(CONVOCODE_DATA_DIR); }

PipelineConfig make_config(const fs::path& corpus, const fs::path& fixtures) {
    PipelineConfig cfg;
    cfg.corpus_root = corpus;
    cfg.codebook_path = data_dir() / "codebook.json";
    cfg.templates_dir = data_dir() / "templates";
    cfg.out_dir = corpus / "reports";
    cfg.backend.backend_kind = BackendKind::mock;
    cfg.backend.fixture_dir = fixtures.string();
    cfg.backend.retry_backoff_ms = 0;
    cfg.chunking = test_util::fixture_chunk_plan();
    cfg.emotion_scorer = "hash";
    cfg.arbitration_coder = "arbiter";
    cfg.concurrency = 2;
    return cfg;
}

struct FixtureWorkspace {
    test_util::TempDir tmp{"pipeline"};
    fs::path corpus;
    fs::path fixtures;

    FixtureWorkspace() {
        corpus = tmp.path() / "corpus";
        fixtures = tmp.path() / "fixtures";
        test_util::write_fixture_corpus(corpus);
        const TemplateSet templates = load_templates(data_dir() / "templates");
        test_util::write_fixture_responses(fixtures, templates);
    }
};

// Relative path -> file contents for every regular file under root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        files[fs::relative(entry.path(), root).string()] = test_util::slurp(entry.path());
    }
    return files;
}

std::string strip_timing(const std::string& manifest_text) {
    nlohmann::json j = nlohmann::json::parse(manifest_text);
    j.erase("timing");
    return j.dump(2);
}

const std::vector<std::string> kExpectedReports = {
    "agreement_kappa_table.csv",
    "agreement_report.json",
    "behaviour_distribution.csv",
    "conflict_distribution.csv",
    "correlation_behaviour_conflict.csv",
    "correlation_behaviour_conflict_p.csv",
    "correlation_emotion.csv",
    "correlation_emotion_p.csv",
    "emotion_band.csv",
    "features.csv",
    "pad_shift_tests.csv",
    "participant_distributions.csv",
};

}  // namespace

TEST_CASE("full pipeline run on the fixture corpus reports three ok sessions") {
    FixtureWorkspace ws;
    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    const RunManifest manifest = run_pipeline(cfg);

    REQUIRE(manifest.sessions.size() == 3);
    for (const auto& entry : manifest.sessions) {
        INFO(entry.session, ": ", entry.message);
        CHECK(entry.status == SessionStatus::ok);
        CHECK(entry.warning_count == 0);
        CHECK(entry.error_count == 0);
    }
    CHECK(manifest.count(SessionStatus::ok) == 3);
    CHECK(manifest.report_files == kExpectedReports);
    for (const auto& name : kExpectedReports) CHECK(fs::exists(cfg.out_dir / name));
    CHECK(manifest.sessions_excluded_from_correlations == 0);
}

TEST_CASE("ingest reproduces the hand-derived utterance boundaries") {
    FixtureWorkspace ws;
    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    run_stage(cfg, Stage::ingest);

    for (const auto& session : test_util::fixture_sessions()) {
        const Transcript stored =
            load_transcript(ws.corpus / session.dir_name / "transcript.json");
        CHECK(stored == session.expected_transcript);
    }
}

TEST_CASE("correction rewrites only the expected contents") {
    FixtureWorkspace ws;
    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    run_stage(cfg, Stage::ingest);
    run_stage(cfg, Stage::correct);

    for (const auto& session : test_util::fixture_sessions()) {
        const Transcript stored =
            load_transcript(ws.corpus / session.dir_name / "transcript.json");
        CHECK(stored == session.corrected_transcript);
    }
}

TEST_CASE("coded sessions carry roles, annotations, and a provenance manifest") {
    FixtureWorkspace ws;
    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    run_pipeline(cfg);

    const SessionPaths paths{ws.corpus / "P0_2024-04-11"};
    const RoleMap roles = load_roles(paths.roles());
    CHECK(roles.assignments.at("Speaker 1") == Role::parent);

    const auto behaviours = load_behaviours(paths.behaviours());
    REQUIRE(behaviours.size() == 3);
    CHECK(behaviours[2].codes ==
          std::vector<std::string>{"behaviour.LP", "behaviour.ENC"});

    const auto conflicts = load_conflicts(paths.conflicts());
    REQUIRE(conflicts.size() == 1);
    CHECK(conflicts[0].conflict_key == "conflict.KC");
    CHECK(conflicts[0].severity == Intensity::Low);

    // Zero conflicts is a valid result for the third session.
    CHECK(load_conflicts(SessionPaths{ws.corpus / "P7_2024-04-11"}.conflicts()).empty());

    const std::string manifest = test_util::slurp(paths.manifest());
    CHECK(manifest.find("model_name") != std::string::npos);
    CHECK(manifest.find("template_versions") != std::string::npos);
    CHECK(manifest.find("codebook_version") != std::string::npos);
}

TEST_CASE("two runs produce byte-identical session files, reports, and manifests") {
    FixtureWorkspace ws;
    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);

    const RunManifest first = run_pipeline(cfg);
    write_manifest(first, cfg.out_dir / "run_manifest.json");
    auto snap_first = snapshot(ws.corpus);

    const RunManifest second = run_pipeline(cfg);
    write_manifest(second, cfg.out_dir / "run_manifest.json");
    auto snap_second = snapshot(ws.corpus);

    REQUIRE(snap_first.size() == snap_second.size());
    for (auto& [path, contents] : snap_first) {
        REQUIRE(snap_second.count(path) == 1);
        if (path.find("run_manifest.json") != std::string::npos) {
            CHECK(strip_timing(contents) == strip_timing(snap_second.at(path)));
        } else {
            INFO("file differs: ", path);
            CHECK(contents == snap_second.at(path));
        }
    }
}

TEST_CASE("stage-by-stage execution matches the monolithic run") {
    FixtureWorkspace staged_ws;
    FixtureWorkspace full_ws;

    const PipelineConfig staged_cfg = make_config(staged_ws.corpus, staged_ws.fixtures);
    for (const Stage stage :
         {Stage::ingest, Stage::correct, Stage::roles, Stage::code, Stage::report})
        run_stage(staged_cfg, stage);

    const PipelineConfig full_cfg = make_config(full_ws.corpus, full_ws.fixtures);
    run_pipeline(full_cfg);

    const auto staged = snapshot(staged_ws.corpus);
    const auto full = snapshot(full_ws.corpus);
    REQUIRE(staged.size() == full.size());
    for (const auto& [path, contents] : staged) {
        INFO("file differs: ", path);
        REQUIRE(full.count(path) == 1);
        CHECK(contents == full.at(path));
    }
}

TEST_CASE("a malformed session is isolated as an error without failing the run") {
    FixtureWorkspace ws;
    const fs::path bad = ws.corpus / "P9_2024-04-13";
    test_util::spit(bad / "transcript.json", "[{\"id\": 1, ");

    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    const RunManifest manifest = run_pipeline(cfg);
    REQUIRE(manifest.sessions.size() == 4);
    CHECK(manifest.count(SessionStatus::ok) == 3);
    CHECK(manifest.count(SessionStatus::error) == 1);

    for (const auto& entry : manifest.sessions) {
        if (entry.session == "P9_2024-04-13") {
            CHECK(entry.status == SessionStatus::error);
            CHECK_FALSE(entry.message.empty());
        }
    }
    // Corpus-level reports still cover the healthy sessions.
    CHECK(fs::exists(cfg.out_dir / "features.csv"));
}

TEST_CASE("an empty corpus raises an error before any work") {
    test_util::TempDir tmp("empty");
    fs::create_directories(tmp.path() / "corpus");
    PipelineConfig cfg = make_config(tmp.path() / "corpus", tmp.path() / "fixtures");
    fs::create_directories(tmp.path() / "fixtures");
    try {
        run_pipeline(cfg);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("no sessions found") != std::string::npos);
    }
}

TEST_CASE("disabling agreement removes only the agreement reports") {
    FixtureWorkspace ws;
    PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    cfg.enable_agreement = false;
    const RunManifest manifest = run_pipeline(cfg);
    CHECK_FALSE(fs::exists(cfg.out_dir / "agreement_report.json"));
    CHECK_FALSE(fs::exists(cfg.out_dir / "agreement_kappa_table.csv"));
    CHECK(fs::exists(cfg.out_dir / "behaviour_distribution.csv"));
    CHECK(fs::exists(cfg.out_dir / "emotion_band.csv"));
    CHECK(manifest.report_files.size() == kExpectedReports.size() - 2);
}

TEST_CASE("config files load with path resolution and validation") {
    FixtureWorkspace ws;
    const fs::path config_path = ws.tmp.path() / "config.json";
    test_util::spit(config_path, R"({
        "corpus": "corpus",
        "codebook": ")" + (data_dir() / "codebook.json").string() + R"(",
        "templates": ")" + (data_dir() / "templates").string() + R"(",
        "backend": {"kind": "mock", "fixture_dir": "fixtures", "retry_backoff_ms": 0},
        "chunking": {"max_utterances_per_chunk": 4, "overlap_utterances": 1},
        "emotion": {"scorer": "hash"},
        "analysis": {"arbitration_coder": "arbiter"},
        "concurrency": 2
    })");
    PipelineConfig cfg = PipelineConfig::from_file(config_path);
    CHECK(cfg.corpus_root == ws.tmp.path() / "corpus");
    CHECK(cfg.out_dir == ws.tmp.path() / "corpus" / "reports");
    CHECK(cfg.chunking.max_utterances_per_chunk == 4);
    cfg.validate();

    const RunManifest manifest = run_pipeline(cfg);
    CHECK(manifest.count(SessionStatus::ok) == 3);

    PipelineConfig bad = cfg;
    bad.corpus_root = ws.tmp.path() / "missing";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("agreement report carries both coding tasks with kappa, confusion, chi-squared") {
    FixtureWorkspace ws;
    const PipelineConfig cfg = make_config(ws.corpus, ws.fixtures);
    run_stage(cfg, Stage::agree);

    const auto report =
        nlohmann::json::parse(test_util::slurp(cfg.out_dir / "agreement_report.json"));
    for (const std::string task : {"behaviour", "conflict"}) {
        REQUIRE(report.contains(task));
        const auto& section = report[task];
        CHECK(section["model_coder"] == "model");
        CHECK(section.contains("kappa_pairwise"));
        CHECK(section.contains("kappa_vs_consensus"));
        CHECK(section.contains("confusion"));
        CHECK(section.contains("chi_squared"));
        CHECK(section["chi_squared"].contains("p_value"));
    }
    // Conflict task: 4 experts + model -> C(5,2) = 10 pairwise cells.
    CHECK(report["conflict"]["kappa_pairwise"].size() == 10);
    CHECK(report["conflict"]["kappa_vs_consensus"].size() == 5);

    const auto grid = csv::read_file(cfg.out_dir / "agreement_kappa_table.csv");
    REQUIRE(!grid.empty());
    CHECK(grid[0][0] == "task");
    CHECK(grid[0].back() == "consensus");
}
