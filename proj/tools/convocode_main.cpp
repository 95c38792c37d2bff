// convocode: batch pipeline for codebook-driven conversation coding and
// statistical analysis of homework-session transcripts.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "convocode/errors.hpp"
#include "convocode/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

fs::path default_data_dir(const char* argv0) {
    if (const char* env = std::getenv("CONVOCODE_DATA_DIR"); env && *env) return env;

    // Installed layout: <prefix>/bin/convocode -> <prefix>/share/convocode
    std::error_code ec;
    fs::path exe = fs::weakly_canonical(fs::path(argv0), ec);
    if (!ec && exe.has_parent_path()) {
        const fs::path share = exe.parent_path().parent_path() / "share" / "convocode";
        if (fs::is_directory(share)) return share;
    }

#ifdef CONVOCODE_SOURCE_DATA_DIR
    if (fs::is_directory(CONVOCODE_SOURCE_DATA_DIR)) return CONVOCODE_SOURCE_DATA_DIR;
#endif
    return {};
}

struct CliOptions {
    std::string config;
    std::string corpus;
    std::string out;
    std::string codebook;
    std::string templates;
    std::string mock_fixtures;
    std::string stage;
    int concurrency = 0;
};

convocode::PipelineConfig resolve_config(const CliOptions& opts, const char* argv0) {
    convocode::PipelineConfig cfg;
    if (!opts.config.empty()) cfg = convocode::PipelineConfig::from_file(opts.config);

    if (!opts.corpus.empty()) cfg.corpus_root = opts.corpus;
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    if (!opts.codebook.empty()) cfg.codebook_path = opts.codebook;
    if (!opts.templates.empty()) cfg.templates_dir = opts.templates;
    if (!opts.mock_fixtures.empty()) {
        cfg.backend.backend_kind = convocode::BackendKind::mock;
        cfg.backend.fixture_dir = opts.mock_fixtures;
    }
    if (opts.concurrency > 0) cfg.concurrency = opts.concurrency;

    const fs::path data = default_data_dir(argv0);
    if (cfg.codebook_path.empty() && !data.empty()) cfg.codebook_path = data / "codebook.json";
    if (cfg.templates_dir.empty() && !data.empty()) cfg.templates_dir = data / "templates";
    if (cfg.out_dir.empty() && !cfg.corpus_root.empty()) cfg.out_dir = cfg.corpus_root / "reports";
    return cfg;
}

void print_summary(const convocode::RunManifest& manifest) {
    for (const auto& entry : manifest.sessions) {
        std::cout << "  " << entry.session << ": " << convocode::to_string(entry.status);
        if (entry.warning_count > 0) std::cout << " (" << entry.warning_count << " warnings)";
        if (!entry.message.empty()) std::cout << " - " << entry.message;
        std::cout << "\n";
    }
    std::cout << "sessions: " << manifest.count(convocode::SessionStatus::ok) << " ok, "
              << manifest.count(convocode::SessionStatus::warning) << " warning, "
              << manifest.count(convocode::SessionStatus::error) << " error\n";
    if (!manifest.report_files.empty()) {
        std::cout << "reports:";
        for (const auto& name : manifest.report_files) std::cout << " " << name;
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"codebook-driven conversation coding and analysis pipeline"};
    app.require_subcommand(0, 1);

    CliOptions opts;
    app.add_option("--config", opts.config, "pipeline config file (JSON)");
    app.add_option("--corpus", opts.corpus, "corpus root containing session directories");
    app.add_option("--out", opts.out, "report output directory (default <corpus>/reports)");
    app.add_option("--codebook", opts.codebook, "codebook file");
    app.add_option("--templates", opts.templates, "prompt template directory");
    app.add_option("--mock-fixtures", opts.mock_fixtures,
                   "mock fixture directory (switches the backend to mock)");
    app.add_option("--stage", opts.stage,
                   "stage to run: ingest|correct|roles|code|agree|emotions|stats|report|run");
    app.add_option("--concurrency", opts.concurrency, "max sessions processed in parallel");

    const char* stage_names[] = {"ingest", "correct", "roles",  "code", "agree",
                                 "emotions", "stats",   "report", "run"};
    const char* stage_help[] = {
        "segment raw diarized segments into transcripts",
        "run LLM transcription repair over stored transcripts",
        "infer speaker roles",
        "code behaviours and conflicts",
        "compute agreement statistics from expert label files",
        "compute emotion dynamics (binning, smoothing, bands)",
        "compute per-session features and corpus statistics",
        "emit all report files from stored artifacts",
        "run the full pipeline"};
    for (std::size_t i = 0; i < 9; ++i) {
        auto* sub = app.add_subcommand(stage_names[i], stage_help[i]);
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    std::string stage_name = opts.stage;
    for (const auto* sub : app.get_subcommands())
        stage_name = sub->get_name();
    if (stage_name.empty()) stage_name = "run";

    try {
        const convocode::Stage stage = convocode::parse_stage(stage_name);
        const convocode::PipelineConfig cfg = resolve_config(opts, argv[0]);

        const convocode::RunManifest manifest = convocode::run_stage(cfg, stage);
        convocode::write_manifest(manifest, cfg.out_dir / "run_manifest.json");
        print_summary(manifest);

        const bool total_failure =
            !manifest.sessions.empty() &&
            manifest.count(convocode::SessionStatus::error) == manifest.sessions.size();
        return total_failure ? 3 : 0;
    } catch (const convocode::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
