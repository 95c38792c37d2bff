#include "convocode/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "convocode/agreement.hpp"
#include "convocode/annotation.hpp"
#include "convocode/codebook.hpp"
#include "convocode/csv.hpp"
#include "convocode/errors.hpp"
#include "convocode/stats.hpp"
#include "convocode/store.hpp"

namespace convocode {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// --- config -------------------------------------------------------------------

void PipelineConfig::validate() const {
    if (corpus_root.empty() || !std::filesystem::is_directory(corpus_root))
        throw ConfigError("corpus root is not a directory: " + corpus_root.string());
    if (!std::filesystem::is_regular_file(codebook_path))
        throw ConfigError("codebook file not found: " + codebook_path.string());
    if (!std::filesystem::is_directory(templates_dir))
        throw ConfigError("templates directory not found: " + templates_dir.string());
    backend.validate();
    if (segmentation.pause_threshold_ms <= 0)
        throw ConfigError("pause_threshold_ms must be positive");
    if (chunking.max_utterances_per_chunk < 1 || chunking.overlap_utterances < 0 ||
        chunking.overlap_utterances >= chunking.max_utterances_per_chunk)
        throw ConfigError("invalid chunk plan");
    if (!(smoothing.frac > 0.0) || smoothing.frac > 1.0)
        throw ConfigError("loess frac must be in (0, 1]");
    if (bin_width_ms <= 0) throw ConfigError("bin_width_ms must be positive");
    if (window_ms <= 0) throw ConfigError("window_ms must be positive");
    if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
    if (emotion_scorer != "none" && emotion_scorer != "hash")
        throw ConfigError("emotion_scorer must be \"none\" or \"hash\"");
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }

    PipelineConfig cfg;
    const auto base = path.parent_path();
    auto resolve = [&base](const std::string& p) -> std::filesystem::path {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    if (j.contains("corpus")) cfg.corpus_root = resolve(j["corpus"].get<std::string>());
    if (j.contains("codebook")) cfg.codebook_path = resolve(j["codebook"].get<std::string>());
    if (j.contains("templates")) cfg.templates_dir = resolve(j["templates"].get<std::string>());
    if (j.contains("out")) cfg.out_dir = resolve(j["out"].get<std::string>());

    if (j.contains("backend")) {
        const auto& b = j["backend"];
        if (b.contains("kind")) {
            const std::string kind = b["kind"].get<std::string>();
            if (kind == "mock") cfg.backend.backend_kind = BackendKind::mock;
            else if (kind == "http_chat") cfg.backend.backend_kind = BackendKind::http_chat;
            else throw ConfigError("backend.kind must be \"mock\" or \"http_chat\"");
        }
        if (b.contains("model")) cfg.backend.model_name = b["model"].get<std::string>();
        if (b.contains("temperature")) cfg.backend.temperature = b["temperature"].get<double>();
        if (b.contains("max_retries")) cfg.backend.max_retries = b["max_retries"].get<int>();
        if (b.contains("request_timeout_ms"))
            cfg.backend.request_timeout_ms = b["request_timeout_ms"].get<int>();
        if (b.contains("api_key_env_var"))
            cfg.backend.api_key_env_var = b["api_key_env_var"].get<std::string>();
        if (b.contains("base_url")) cfg.backend.base_url = b["base_url"].get<std::string>();
        if (b.contains("fixture_dir"))
            cfg.backend.fixture_dir = resolve(b["fixture_dir"].get<std::string>()).string();
        if (b.contains("retry_backoff_ms"))
            cfg.backend.retry_backoff_ms = b["retry_backoff_ms"].get<int>();
    }
    if (j.contains("segmentation") && j["segmentation"].contains("pause_threshold_ms"))
        cfg.segmentation.pause_threshold_ms =
            j["segmentation"]["pause_threshold_ms"].get<std::int64_t>();
    if (j.contains("chunking")) {
        const auto& c = j["chunking"];
        if (c.contains("max_utterances_per_chunk"))
            cfg.chunking.max_utterances_per_chunk = c["max_utterances_per_chunk"].get<int>();
        if (c.contains("overlap_utterances"))
            cfg.chunking.overlap_utterances = c["overlap_utterances"].get<int>();
    }
    if (j.contains("roles") && j["roles"].contains("max_utterances"))
        cfg.role_max_utterances = j["roles"]["max_utterances"].get<int>();
    if (j.contains("emotion")) {
        const auto& e = j["emotion"];
        if (e.contains("bin_width_ms")) cfg.bin_width_ms = e["bin_width_ms"].get<std::int64_t>();
        if (e.contains("window_ms")) cfg.window_ms = e["window_ms"].get<std::int64_t>();
        if (e.contains("frac")) cfg.smoothing.frac = e["frac"].get<double>();
        if (e.contains("min_content_chars"))
            cfg.min_content_chars = e["min_content_chars"].get<int>();
        if (e.contains("scorer")) cfg.emotion_scorer = e["scorer"].get<std::string>();
    }
    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        if (a.contains("agreement")) cfg.enable_agreement = a["agreement"].get<bool>();
        if (a.contains("emotions")) cfg.enable_emotions = a["emotions"].get<bool>();
        if (a.contains("model_coder_id"))
            cfg.model_coder_id = a["model_coder_id"].get<std::string>();
        if (a.contains("arbitration_coder"))
            cfg.arbitration_coder = a["arbitration_coder"].get<std::string>();
    }
    if (j.contains("concurrency")) cfg.concurrency = j["concurrency"].get<int>();

    if (cfg.out_dir.empty() && !cfg.corpus_root.empty()) cfg.out_dir = cfg.corpus_root / "reports";
    return cfg;
}

// --- stage names ----------------------------------------------------------------

Stage parse_stage(const std::string& name) {
    if (name == "ingest") return Stage::ingest;
    if (name == "correct") return Stage::correct;
    if (name == "roles") return Stage::roles;
    if (name == "code") return Stage::code;
    if (name == "agree") return Stage::agree;
    if (name == "emotions") return Stage::emotions;
    if (name == "stats") return Stage::stats;
    if (name == "report") return Stage::report;
    if (name == "run") return Stage::run;
    throw ConfigError("unknown stage: " + name);
}

const char* to_string(Stage s) {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::correct: return "correct";
        case Stage::roles: return "roles";
        case Stage::code: return "code";
        case Stage::agree: return "agree";
        case Stage::emotions: return "emotions";
        case Stage::stats: return "stats";
        case Stage::report: return "report";
        case Stage::run: return "run";
    }
    return "run";
}

const char* to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::ok: return "ok";
        case SessionStatus::warning: return "warning";
        case SessionStatus::error: return "error";
    }
    return "error";
}

std::size_t RunManifest::count(SessionStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(sessions.begin(), sessions.end(),
                      [s](const SessionStatusEntry& e) { return e.status == s; }));
}

// --- helpers ---------------------------------------------------------------------

namespace {

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string format_general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct SessionContext {
    PipelineConfig config;
    Codebook codebook;
    TemplateSet templates;
    Gateway gateway;
};

struct SessionOutcome {
    std::size_t warnings = 0;
    std::size_t errors = 0;
};

void absorb(SessionOutcome& outcome, const ValidationReport& report) {
    outcome.warnings += report.count(Severity::warning);
    outcome.errors += report.count(Severity::error);
}

Transcript ingest_session(const SessionContext& ctx, const SessionPaths& paths,
                          SessionOutcome& outcome) {
    Transcript t;
    if (std::filesystem::exists(paths.segments())) {
        t = segment_by_pause(load_segments(paths.segments()), ctx.config.segmentation);
        store_transcript(t, paths.transcript());
    } else {
        t = load_transcript(paths.transcript());
    }
    const ValidationReport report = validate_transcript(t);
    absorb(outcome, report);
    if (report.has_errors())
        throw Error("invalid transcript: " + report.findings.front().message);
    return t;
}

Transcript correct_session(const SessionContext& ctx, const SessionPaths& paths,
                           SessionOutcome& outcome) {
    const Transcript t = load_transcript(paths.transcript());
    CorrectionResult result = correct_transcript(t, ctx.gateway, ctx.templates,
                                                 ctx.config.chunking);
    absorb(outcome, result.report);
    store_transcript(result.transcript, paths.transcript());
    return result.transcript;
}

RoleMap roles_session(const SessionContext& ctx, const SessionPaths& paths) {
    const Transcript t = load_transcript(paths.transcript());
    const RoleMap roles = infer_roles(t, ctx.gateway, ctx.templates,
                                      ctx.config.role_max_utterances);
    store_roles(roles, paths.roles());
    return roles;
}

void write_session_manifest(const SessionContext& ctx, const SessionPaths& paths,
                            const SessionOutcome& outcome) {
    ordered_json j;
    j["model_name"] = ctx.config.backend.model_name;
    j["backend"] = to_string(ctx.config.backend.backend_kind);
    j["codebook_version"] = ctx.codebook.version();
    j["template_versions"] = {
        {"transcription_fix", ctx.templates.transcription_fix.version()},
        {"role_recognition", ctx.templates.role_recognition.version()},
        {"behaviour_coding", ctx.templates.behaviour_coding.version()},
        {"conflict_coding", ctx.templates.conflict_coding.version()}};
    j["warnings"] = outcome.warnings;
    j["errors"] = outcome.errors;
    std::ofstream out(paths.manifest());
    out << j.dump(2) << '\n';
}

void code_session(const SessionContext& ctx, const SessionPaths& paths,
                  SessionOutcome& outcome) {
    const Transcript t = load_transcript(paths.transcript());
    if (!std::filesystem::exists(paths.roles()))
        throw Error("roles.json missing; run the roles stage first");
    const RoleMap roles = load_roles(paths.roles());

    auto behaviours = code_behaviours(t, roles, ctx.codebook, ctx.gateway, ctx.templates);
    store_behaviours(behaviours.annotations, paths.behaviours());

    auto conflicts = code_conflicts(t, roles, ctx.codebook, ctx.gateway, ctx.templates);
    store_conflicts(conflicts.annotations, paths.conflicts());

    // Re-validation subsumes the coding findings (spans, unknown codes,
    // severities) and adds duplicate-id checks, so it is the one source of
    // finding counts here.
    absorb(outcome, validate_annotations(behaviours.annotations, conflicts.annotations, t,
                                         ctx.codebook));
    write_session_manifest(ctx, paths, outcome);
}

// --- corpus-level analyses --------------------------------------------------------

struct SessionData {
    std::string name;
    std::string participant_id;
    std::string session_date;
    SessionPaths paths;
};

ordered_json kappa_to_json(const KappaResult& k) {
    return ordered_json{{"kappa", k.kappa},
                        {"observed_agreement", k.observed_agreement},
                        {"expected_agreement", k.expected_agreement},
                        {"n", k.n}};
}

/// Runs one coding task's agreement analysis; returns an empty object when
/// the label file does not exist.
ordered_json agreement_for_task(const PipelineConfig& config, const std::string& task,
                                std::vector<csv::Row>& table_rows) {
    const auto path = config.corpus_root / ("expert_labels_" + task + ".csv");
    if (!std::filesystem::exists(path)) return ordered_json();

    const auto instances = load_labelled_instances(path);

    // Consensus over the human coders only.
    std::vector<LabelledInstance> expert_instances;
    expert_instances.reserve(instances.size());
    for (const auto& instance : instances) {
        LabelledInstance copy = instance;
        copy.labels_by_coder.erase(config.model_coder_id);
        copy.labels_by_coder.erase(config.arbitration_coder);
        if (!copy.labels_by_coder.empty()) expert_instances.push_back(std::move(copy));
    }

    ConsensusPolicy policy;
    if (!config.arbitration_coder.empty()) {
        const std::string arbiter = config.arbitration_coder;
        // Arbitration consults the named coder's label for the tied instance.
        std::map<std::string, std::string> arbiter_labels;
        for (const auto& instance : instances) {
            const auto it = instance.labels_by_coder.find(arbiter);
            if (it != instance.labels_by_coder.end())
                arbiter_labels[instance.instance_id] = it->second;
        }
        policy.arbitration = [arbiter, arbiter_labels](const LabelledInstance& instance,
                                                       const std::vector<std::string>& tied) {
            const auto it = arbiter_labels.find(instance.instance_id);
            if (it == arbiter_labels.end())
                throw ContractError("tie on instance \"" + instance.instance_id +
                                    "\" but arbitration coder \"" + arbiter +
                                    "\" did not label it");
            if (std::find(tied.begin(), tied.end(), it->second) == tied.end())
                throw ContractError("arbitration label \"" + it->second +
                                    "\" is not among the tied labels of instance \"" +
                                    instance.instance_id + "\"");
            return it->second;
        };
    }
    const auto consensus_labels = consensus(expert_instances, policy);

    // Pairwise kappa over every coder (the model included), plus consensus.
    std::vector<LabelledInstance> table_instances;
    table_instances.reserve(instances.size());
    for (const auto& instance : instances) {
        LabelledInstance copy = instance;
        copy.labels_by_coder.erase(config.arbitration_coder);
        if (!copy.labels_by_coder.empty()) table_instances.push_back(std::move(copy));
    }
    const KappaTable table = pairwise_kappa_table(table_instances, consensus_labels);

    // Confusion of consensus (reference) vs the model (predicted).
    std::vector<std::string> reference, predicted;
    std::set<std::string> category_set;
    for (const auto& instance : instances) {
        const auto im = instance.labels_by_coder.find(config.model_coder_id);
        const auto ic = consensus_labels.find(instance.instance_id);
        if (im == instance.labels_by_coder.end() || ic == consensus_labels.end()) continue;
        reference.push_back(ic->second);
        predicted.push_back(im->second);
        category_set.insert(ic->second);
        category_set.insert(im->second);
    }

    ordered_json out;
    out["n_instances"] = instances.size();
    out["model_coder"] = config.model_coder_id;
    out["coders"] = table.coders;

    ordered_json pairwise = ordered_json::array();
    for (const auto& [pair, result] : table.pairwise) {
        ordered_json cell = kappa_to_json(result);
        cell["a"] = pair.first;
        cell["b"] = pair.second;
        pairwise.push_back(cell);
    }
    out["kappa_pairwise"] = pairwise;
    ordered_json vs = ordered_json::array();
    for (const auto& [coder, result] : table.vs_consensus) {
        ordered_json cell = kappa_to_json(result);
        cell["coder"] = coder;
        vs.push_back(cell);
    }
    out["kappa_vs_consensus"] = vs;

    if (!reference.empty() && category_set.size() >= 2) {
        const std::vector<std::string> categories(category_set.begin(), category_set.end());
        const ConfusionMatrix cm = confusion_matrix(reference, predicted, categories);
        out["confusion"] = {{"categories", cm.categories}, {"counts", cm.counts}};
        try {
            const ChiSquaredResult chi = chi_squared_independence(cm);
            out["chi_squared"] = {{"statistic", chi.statistic},
                                  {"df", chi.degrees_of_freedom},
                                  {"p_value", chi.p_value}};
        } catch (const DomainError& e) {
            out["chi_squared"] = {{"error", e.what()}};
        }
    }

    // Table-6-shaped grid: coder rows, coder columns, consensus column.
    // The model coder is listed last.
    std::vector<std::string> ordered_coders;
    for (const auto& coder : table.coders)
        if (coder != config.model_coder_id) ordered_coders.push_back(coder);
    if (std::find(table.coders.begin(), table.coders.end(), config.model_coder_id) !=
        table.coders.end())
        ordered_coders.push_back(config.model_coder_id);

    // Each task gets its own header row; coder sets may differ between tasks.
    csv::Row header = {"task", "coder"};
    for (const auto& coder : ordered_coders) header.push_back(coder);
    header.push_back("consensus");
    table_rows.push_back(header);
    for (const auto& row_coder : ordered_coders) {
        csv::Row row = {task, row_coder};
        for (const auto& col_coder : ordered_coders) {
            if (row_coder == col_coder) {
                row.push_back("");
                continue;
            }
            const auto key = row_coder < col_coder
                                 ? std::make_pair(row_coder, col_coder)
                                 : std::make_pair(col_coder, row_coder);
            const auto it = table.pairwise.find(key);
            row.push_back(it == table.pairwise.end() ? "NA"
                                                     : format_fixed(it->second.kappa, 3));
        }
        const auto vc = table.vs_consensus.find(row_coder);
        row.push_back(vc == table.vs_consensus.end() ? "NA" : format_fixed(vc->second.kappa, 3));
        table_rows.push_back(row);
    }
    return out;
}

void run_agreement(const PipelineConfig& config, RunManifest& manifest) {
    std::vector<csv::Row> table_rows;
    ordered_json report;
    for (const std::string task : {"behaviour", "conflict"}) {
        ordered_json section = agreement_for_task(config, task, table_rows);
        if (!section.is_null()) report[task] = section;
    }
    if (report.is_null()) return;

    std::filesystem::create_directories(config.out_dir);
    {
        std::ofstream out(config.out_dir / "agreement_report.json");
        out << report.dump(2) << '\n';
    }
    csv::write_file(config.out_dir / "agreement_kappa_table.csv", table_rows);
    manifest.report_files.push_back("agreement_report.json");
    manifest.report_files.push_back("agreement_kappa_table.csv");
}

// Marks a session entry as failed during a corpus-level analysis unless an
// earlier stage already did.
void flag_session(SessionStatusEntry& entry, const std::string& message) {
    if (entry.status == SessionStatus::error) return;
    entry.status = SessionStatus::error;
    entry.error_count = std::max<std::size_t>(entry.error_count, 1);
    entry.message = message;
}

void run_emotions(const PipelineConfig& config, const std::vector<SessionData>& sessions,
                  std::vector<SessionStatusEntry>& entries, RunManifest& manifest) {
    // Per-session smoothed curves grouped by participant.
    std::map<std::string, std::vector<std::vector<TimeValue>>> curves_by_participant;

    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto& session = sessions[i];
        if (entries[i].status == SessionStatus::error) continue;
        try {
            std::vector<SentenceEmotion> scores;
            if (std::filesystem::exists(session.paths.scores())) {
                scores = load_scores(session.paths.scores());
            } else if (config.emotion_scorer == "hash" &&
                       std::filesystem::exists(session.paths.transcript())) {
                const Transcript t = load_transcript(session.paths.transcript());
                const auto scorable = filter_scorable(t.utterances, config.min_content_chars);
                if (scorable.empty()) continue;
                HashEmotionScorer scorer;
                scores = score_sentences(scorable, scorer);
                store_scores(scores, session.paths.scores());
            } else {
                continue;
            }

            scores = window_first(std::move(scores), config.window_ms);
            const BinnedSeries bins = bin_series(scores, config.bin_width_ms, session.name);
            if (bins.values.size() < 2) continue;

            std::vector<TimeValue> series;
            series.reserve(bins.values.size());
            for (const auto& bin : bins.values)
                series.push_back(
                    {static_cast<double>(bin.bin_index * bins.bin_width_ms), bin.mean});
            curves_by_participant[session.participant_id].push_back(
                loess_smooth(series, config.smoothing));
        } catch (const std::exception& e) {
            flag_session(entries[i], e.what());
        }
    }
    if (curves_by_participant.empty()) return;

    std::vector<double> grid;
    for (std::int64_t t = 0; t < config.window_ms; t += config.bin_width_ms)
        grid.push_back(static_cast<double>(t));

    std::vector<csv::Row> rows;
    rows.push_back({"participant_id", "t_ms", "mean", "se", "n"});
    for (const auto& [participant, curves] : curves_by_participant) {
        const BandSeries band = band_across_sessions(curves, grid);
        for (const auto& point : band) {
            rows.push_back({participant, format_general(point.t),
                            format_general(point.mean),
                            point.standard_error ? format_general(*point.standard_error) : "",
                            std::to_string(point.n_sessions)});
        }
    }
    std::filesystem::create_directories(config.out_dir);
    csv::write_file(config.out_dir / "emotion_band.csv", rows);
    manifest.report_files.push_back("emotion_band.csv");
}

std::string correlation_cell_text(const std::optional<CorrelationCell>& cell) {
    if (!cell) return "NA";
    return format_fixed(cell->r, 4) + "|" + cell->stars;
}

void write_correlation_files(const CorrelationMatrix& matrix, const std::string& stem,
                             const std::string& row_header, const PipelineConfig& config,
                             RunManifest& manifest) {
    std::vector<csv::Row> grid, pgrid;
    csv::Row header = {row_header};
    for (const auto& name : matrix.col_names) header.push_back(name);
    grid.push_back(header);
    pgrid.push_back(header);
    for (std::size_t i = 0; i < matrix.row_names.size(); ++i) {
        csv::Row row = {matrix.row_names[i]};
        csv::Row prow = {matrix.row_names[i]};
        for (std::size_t j = 0; j < matrix.col_names.size(); ++j) {
            row.push_back(correlation_cell_text(matrix.cells[i][j]));
            prow.push_back(matrix.cells[i][j] ? format_general(matrix.cells[i][j]->p_value)
                                              : "NA");
        }
        grid.push_back(row);
        pgrid.push_back(prow);
    }
    csv::write_file(config.out_dir / (stem + ".csv"), grid);
    csv::write_file(config.out_dir / (stem + "_p.csv"), pgrid);
    manifest.report_files.push_back(stem + ".csv");
    manifest.report_files.push_back(stem + "_p.csv");
}

void run_stats(const PipelineConfig& config, const Codebook& codebook,
               const std::vector<SessionData>& sessions,
               std::vector<SessionStatusEntry>& entries, RunManifest& manifest) {
    std::vector<SessionFeatures> features;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto& session = sessions[i];
        if (entries[i].status == SessionStatus::error) continue;
        if (!std::filesystem::exists(session.paths.behaviours()) ||
            !std::filesystem::exists(session.paths.conflicts()))
            continue;

        try {
            auto behaviours = load_behaviours(session.paths.behaviours());
            auto conflicts = load_conflicts(session.paths.conflicts());
            // Flagged records were surfaced as findings at coding time; counting
            // uses the resolvable remainder.
            std::erase_if(behaviours, [](const BehaviourAnnotation& a) {
                return !a.unresolved_labels.empty() || a.codes.empty();
            });
            std::erase_if(conflicts, [](const ConflictAnnotation& a) {
                return !a.conflict_key.has_value();
            });

            std::optional<SurveyResponse> survey;
            if (std::filesystem::exists(session.paths.survey()))
                survey = load_survey(session.paths.survey());

            SessionFeatures f = session_feature_counts(behaviours, conflicts, codebook, survey);
            f.participant_id = session.participant_id;
            f.session_date = session.session_date;
            features.push_back(std::move(f));
        } catch (const std::exception& e) {
            flag_session(entries[i], e.what());
        }
    }
    if (features.empty()) return;

    std::filesystem::create_directories(config.out_dir);
    store_features_csv(features, codebook, config.out_dir / "features.csv");
    manifest.report_files.push_back("features.csv");

    // Distribution tables.
    const DistributionSummary summary = distribution_summary(features, codebook);
    {
        std::vector<csv::Row> rows;
        rows.push_back({"code", "display_name", "valence", "mean_per_session", "total_count"});
        std::array<long, 3> valence_totals{0, 0, 0};
        for (const auto& f : features)
            for (int k = 0; k < 3; ++k) valence_totals[k] += f.valence_totals[k];
        for (const auto& b : codebook.behaviours()) {
            long total = 0;
            for (const auto& f : features) {
                const auto it = f.behaviour_counts.find(b.key);
                if (it != f.behaviour_counts.end()) total += it->second;
            }
            rows.push_back({b.key, b.display_name, to_string(b.valence),
                            format_general(summary.mean_behaviour_counts.at(b.key)),
                            std::to_string(total)});
        }
        const char* share_names[3] = {"valence_share_positive", "valence_share_neutral",
                                      "valence_share_negative"};
        const char* valence_names[3] = {"positive", "neutral", "negative"};
        for (int k = 0; k < 3; ++k) {
            rows.push_back({share_names[k], "", valence_names[k],
                            summary.valence_shares
                                ? format_general((*summary.valence_shares)[k])
                                : "NA",
                            std::to_string(valence_totals[k])});
        }
        csv::write_file(config.out_dir / "behaviour_distribution.csv", rows);
        manifest.report_files.push_back("behaviour_distribution.csv");
    }
    {
        std::vector<csv::Row> rows;
        rows.push_back({"code", "display_name", "mean_per_session", "total_count"});
        for (const auto& c : codebook.conflicts()) {
            long total = 0;
            for (const auto& f : features) {
                const auto it = f.conflict_counts.find(c.key);
                if (it != f.conflict_counts.end()) total += it->second;
            }
            rows.push_back({c.key, c.display_name,
                            format_general(summary.mean_conflict_counts.at(c.key)),
                            std::to_string(total)});
        }
        csv::write_file(config.out_dir / "conflict_distribution.csv", rows);
        manifest.report_files.push_back("conflict_distribution.csv");
    }

    // Per-participant distribution table (valence means, negative-behaviour
    // shares, conflict-type means).
    {
        std::map<std::string, std::vector<const SessionFeatures*>> by_participant;
        for (const auto& f : features) by_participant[f.participant_id].push_back(&f);

        std::vector<const BehaviourCode*> negatives;
        for (const auto& b : codebook.behaviours())
            if (b.valence == Valence::negative) negatives.push_back(&b);

        std::vector<csv::Row> rows;
        csv::Row header = {"participant_id", "n_sessions", "mean_positive", "mean_neutral",
                           "mean_negative"};
        for (const auto* b : negatives) header.push_back("neg_share_" + b->abbrev);
        for (const auto& c : codebook.conflicts()) header.push_back("mean_" + c.abbrev);
        rows.push_back(header);

        for (const auto& [participant, sess] : by_participant) {
            const double n = static_cast<double>(sess.size());
            std::array<double, 3> valence{0, 0, 0};
            long total_negative = 0;
            std::map<std::string, long> neg_counts, conflict_counts;
            for (const auto* f : sess) {
                for (int k = 0; k < 3; ++k) valence[k] += static_cast<double>(f->valence_totals[k]);
                for (const auto* b : negatives) {
                    const auto it = f->behaviour_counts.find(b->key);
                    if (it != f->behaviour_counts.end()) {
                        neg_counts[b->key] += it->second;
                        total_negative += it->second;
                    }
                }
                for (const auto& [key, count] : f->conflict_counts) conflict_counts[key] += count;
            }
            csv::Row row = {participant, std::to_string(sess.size()),
                            format_general(valence[0] / n), format_general(valence[1] / n),
                            format_general(valence[2] / n)};
            for (const auto* b : negatives) {
                row.push_back(total_negative > 0
                                  ? format_general(static_cast<double>(neg_counts[b->key]) /
                                                   static_cast<double>(total_negative))
                                  : "");
            }
            for (const auto& c : codebook.conflicts())
                row.push_back(format_general(static_cast<double>(conflict_counts[c.key]) / n));
            rows.push_back(row);
        }
        csv::write_file(config.out_dir / "participant_distributions.csv", rows);
        manifest.report_files.push_back("participant_distributions.csv");
    }

    // Shift tests on per-parent means (group level), one row per dimension.
    {
        struct Acc {
            std::vector<double> pre, post;
        };
        std::map<std::string, std::array<Acc, 3>> by_participant;
        for (const auto& f : features) {
            if (!f.survey) continue;
            auto& acc = by_participant[f.participant_id];
            acc[0].pre.push_back(f.survey->pre.pleasure);
            acc[0].post.push_back(f.survey->post.pleasure);
            acc[1].pre.push_back(f.survey->pre.arousal);
            acc[1].post.push_back(f.survey->post.arousal);
            acc[2].pre.push_back(f.survey->pre.dominance);
            acc[2].post.push_back(f.survey->post.dominance);
        }

        std::vector<csv::Row> rows;
        rows.push_back({"dimension", "n_parents", "mean_shift", "sd_shift", "t", "df", "p"});
        const char* dims[3] = {"pleasure", "arousal", "dominance"};
        for (int k = 0; k < 3; ++k) {
            std::vector<double> parent_pre, parent_post;
            for (const auto& [participant, acc] : by_participant) {
                const auto& a = acc[k];
                if (a.pre.empty()) continue;
                parent_pre.push_back(std::accumulate(a.pre.begin(), a.pre.end(), 0.0) /
                                     static_cast<double>(a.pre.size()));
                parent_post.push_back(std::accumulate(a.post.begin(), a.post.end(), 0.0) /
                                      static_cast<double>(a.post.size()));
            }
            csv::Row row = {dims[k], std::to_string(parent_pre.size())};
            if (parent_pre.empty()) {
                row.insert(row.end(), {"NA", "NA", "NA", "NA", "NA"});
                rows.push_back(row);
                continue;
            }
            std::vector<double> shifts(parent_pre.size());
            for (std::size_t i = 0; i < parent_pre.size(); ++i)
                shifts[i] = parent_post[i] - parent_pre[i];
            const double mean = std::accumulate(shifts.begin(), shifts.end(), 0.0) /
                                static_cast<double>(shifts.size());
            double ss = 0.0;
            for (const double s : shifts) ss += (s - mean) * (s - mean);
            const double sd = shifts.size() > 1
                                  ? std::sqrt(ss / static_cast<double>(shifts.size() - 1))
                                  : 0.0;
            row.push_back(format_general(mean));
            row.push_back(shifts.size() > 1 ? format_general(sd) : "NA");
            try {
                const TTestResult result = paired_t_test(parent_pre, parent_post);
                row.push_back(format_general(result.t_statistic));
                row.push_back(std::to_string(result.degrees_of_freedom));
                row.push_back(format_general(result.p_value));
            } catch (const DomainError&) {
                row.insert(row.end(), {"NA", "NA", "NA"});
            }
            rows.push_back(row);
        }
        csv::write_file(config.out_dir / "pad_shift_tests.csv", rows);
        manifest.report_files.push_back("pad_shift_tests.csv");
    }

    // Correlation matrices over sessions with surveys.
    std::vector<const SessionFeatures*> surveyed;
    for (const auto& f : features)
        if (f.survey) surveyed.push_back(&f);
    manifest.sessions_excluded_from_correlations = features.size() - surveyed.size();

    if (!surveyed.empty()) {
        auto behaviour_vectors = [&]() {
            std::vector<std::pair<std::string, std::vector<double>>> vecs;
            for (const auto& b : codebook.behaviours()) {
                std::vector<double> v;
                for (const auto* f : surveyed) {
                    const auto it = f->behaviour_counts.find(b.key);
                    v.push_back(it == f->behaviour_counts.end()
                                    ? 0.0
                                    : static_cast<double>(it->second));
                }
                vecs.emplace_back(b.key, std::move(v));
            }
            return vecs;
        }();
        auto conflict_vectors = [&]() {
            std::vector<std::pair<std::string, std::vector<double>>> vecs;
            for (const auto& c : codebook.conflicts()) {
                std::vector<double> v;
                for (const auto* f : surveyed) {
                    const auto it = f->conflict_counts.find(c.key);
                    v.push_back(it == f->conflict_counts.end()
                                    ? 0.0
                                    : static_cast<double>(it->second));
                }
                vecs.emplace_back(c.key, std::move(v));
            }
            return vecs;
        }();

        write_correlation_files(correlation_matrix(behaviour_vectors, conflict_vectors),
                                "correlation_behaviour_conflict", "behaviour", config, manifest);
        manifest.notes.push_back(
            "correlations pool sessions across families; repeated sessions from one family "
            "are not independent observations");

        std::vector<std::pair<std::string, std::vector<double>>> emotion_vectors;
        const char* names[9] = {"pre_pleasure",  "pre_arousal",  "pre_dominance",
                                "post_pleasure", "post_arousal", "post_dominance",
                                "d_pleasure",    "d_arousal",    "d_dominance"};
        for (int k = 0; k < 9; ++k) emotion_vectors.emplace_back(names[k], std::vector<double>());
        for (const auto* f : surveyed) {
            const SurveyResponse& s = *f->survey;
            const EmotionShift shift = *f->shift;
            const double values[9] = {
                static_cast<double>(s.pre.pleasure),   static_cast<double>(s.pre.arousal),
                static_cast<double>(s.pre.dominance),  static_cast<double>(s.post.pleasure),
                static_cast<double>(s.post.arousal),   static_cast<double>(s.post.dominance),
                static_cast<double>(shift.d_pleasure), static_cast<double>(shift.d_arousal),
                static_cast<double>(shift.d_dominance)};
            for (int k = 0; k < 9; ++k) emotion_vectors[k].second.push_back(values[k]);
        }
        std::vector<std::pair<std::string, std::vector<double>>> all_feature_vectors =
            behaviour_vectors;
        all_feature_vectors.insert(all_feature_vectors.end(), conflict_vectors.begin(),
                                   conflict_vectors.end());
        write_correlation_files(correlation_matrix(emotion_vectors, all_feature_vectors),
                                "correlation_emotion", "emotion", config, manifest);
    }
}

}  // namespace

// --- run_stage ---------------------------------------------------------------------

RunManifest run_stage(const PipelineConfig& config, Stage stage) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();

    SessionContext ctx{config, load_codebook(config.codebook_path),
                       load_templates(config.templates_dir), make_gateway(config.backend)};

    const auto dirs = list_session_dirs(config.corpus_root);
    if (dirs.empty()) throw Error("no sessions found in " + config.corpus_root.string());

    std::vector<SessionData> sessions;
    sessions.reserve(dirs.size());
    for (const auto& dir : dirs) {
        SessionData data;
        data.name = dir.filename().string();
        data.paths = SessionPaths{dir};
        parse_session_dir_name(data.name, data.participant_id, data.session_date);
        sessions.push_back(std::move(data));
    }

    RunManifest manifest;
    manifest.codebook_version = ctx.codebook.version();
    manifest.template_versions = {
        {"transcription_fix", ctx.templates.transcription_fix.version()},
        {"role_recognition", ctx.templates.role_recognition.version()},
        {"behaviour_coding", ctx.templates.behaviour_coding.version()},
        {"conflict_coding", ctx.templates.conflict_coding.version()}};
    manifest.config_snapshot = {
        {"corpus", config.corpus_root.string()},
        {"codebook", config.codebook_path.string()},
        {"templates", config.templates_dir.string()},
        {"out", config.out_dir.string()},
        {"stage", to_string(stage)},
        {"backend", to_string(config.backend.backend_kind)},
        {"model", config.backend.model_name},
        {"pause_threshold_ms", std::to_string(config.segmentation.pause_threshold_ms)},
        {"chunk_max", std::to_string(config.chunking.max_utterances_per_chunk)},
        {"chunk_overlap", std::to_string(config.chunking.overlap_utterances)},
        {"bin_width_ms", std::to_string(config.bin_width_ms)},
        {"window_ms", std::to_string(config.window_ms)},
        {"loess_frac", format_general(config.smoothing.frac)},
        {"min_content_chars", std::to_string(config.min_content_chars)},
        {"emotion_scorer", config.emotion_scorer},
        {"concurrency", std::to_string(config.concurrency)}};

    const bool per_session_stage = stage == Stage::ingest || stage == Stage::correct ||
                                   stage == Stage::roles || stage == Stage::code ||
                                   stage == Stage::run;

    std::vector<SessionStatusEntry> entries(sessions.size());
    if (per_session_stage) {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= sessions.size()) return;
                const SessionData& session = sessions[i];
                SessionStatusEntry entry;
                entry.session = session.name;
                SessionOutcome outcome;
                try {
                    switch (stage) {
                        case Stage::ingest:
                            ingest_session(ctx, session.paths, outcome);
                            break;
                        case Stage::correct:
                            correct_session(ctx, session.paths, outcome);
                            break;
                        case Stage::roles:
                            roles_session(ctx, session.paths);
                            break;
                        case Stage::code:
                            code_session(ctx, session.paths, outcome);
                            break;
                        case Stage::run:
                            ingest_session(ctx, session.paths, outcome);
                            correct_session(ctx, session.paths, outcome);
                            roles_session(ctx, session.paths);
                            code_session(ctx, session.paths, outcome);
                            break;
                        default:
                            break;
                    }
                    entry.warning_count = outcome.warnings;
                    entry.error_count = outcome.errors;
                    entry.status = outcome.errors > 0
                                       ? SessionStatus::error
                                       : (outcome.warnings > 0 ? SessionStatus::warning
                                                               : SessionStatus::ok);
                } catch (const std::exception& e) {
                    entry.status = SessionStatus::error;
                    entry.error_count = std::max<std::size_t>(outcome.errors, 1);
                    entry.warning_count = outcome.warnings;
                    entry.message = e.what();
                }
                entries[i] = std::move(entry);
            }
        };
        const int workers =
            std::clamp<int>(config.concurrency, 1, static_cast<int>(sessions.size()));
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < sessions.size(); ++i) {
            entries[i].session = sessions[i].name;
            entries[i].status = SessionStatus::ok;
        }
    }

    // Corpus-level analyses run single-threaded after the sessions.
    const bool do_agree = stage == Stage::agree || stage == Stage::report ||
                          (stage == Stage::run && config.enable_agreement);
    const bool do_emotions = stage == Stage::emotions || stage == Stage::report ||
                             (stage == Stage::run && config.enable_emotions);
    const bool do_stats =
        stage == Stage::stats || stage == Stage::report || stage == Stage::run;

    if (do_agree && config.enable_agreement) run_agreement(config, manifest);
    if (do_emotions && config.enable_emotions)
        run_emotions(config, sessions, entries, manifest);
    if (do_stats) run_stats(config, ctx.codebook, sessions, entries, manifest);
    manifest.sessions = std::move(entries);

    std::sort(manifest.report_files.begin(), manifest.report_files.end());
    manifest.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return manifest;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    ordered_json j;
    j["config"] = manifest.config_snapshot;
    j["codebook_version"] = manifest.codebook_version;
    j["template_versions"] = manifest.template_versions;
    ordered_json sessions = ordered_json::array();
    for (const auto& entry : manifest.sessions) {
        sessions.push_back({{"session", entry.session},
                            {"status", to_string(entry.status)},
                            {"warnings", entry.warning_count},
                            {"errors", entry.error_count},
                            {"message", entry.message}});
    }
    j["sessions"] = sessions;
    j["totals"] = {{"ok", manifest.count(SessionStatus::ok)},
                   {"warning", manifest.count(SessionStatus::warning)},
                   {"error", manifest.count(SessionStatus::error)}};
    j["report_files"] = manifest.report_files;
    j["notes"] = manifest.notes;
    j["sessions_excluded_from_correlations"] = manifest.sessions_excluded_from_correlations;
    j["timing"] = {{"seconds", manifest.elapsed_seconds}};

    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace convocode
