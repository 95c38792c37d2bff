#include "convocode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "convocode/csv.hpp"
#include "convocode/errors.hpp"
#include "convocode/special_functions.hpp"

namespace convocode {

using nlohmann::json;

void SurveyResponse::validate() const {
    for (const int v : {pre.pleasure, pre.arousal, pre.dominance, post.pleasure, post.arousal,
                        post.dominance}) {
        if (v < 1 || v > 5)
            throw DomainError("survey value " + std::to_string(v) + " outside [1, 5]");
    }
}

EmotionShift emotion_shift(const SurveyResponse& s) {
    s.validate();
    return EmotionShift{s.post.pleasure - s.pre.pleasure, s.post.arousal - s.pre.arousal,
                        s.post.dominance - s.pre.dominance};
}

TTestResult paired_t_test(const std::vector<double>& pre, const std::vector<double>& post) {
    if (pre.size() != post.size()) throw DomainError("paired_t_test: length mismatch");
    const std::size_t n = pre.size();
    if (n < 2) throw DomainError("paired_t_test: need at least 2 pairs");

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = post[i] - pre[i];

    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (const double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) throw DomainError("paired_t_test: zero-variance differences");

    TTestResult result;
    result.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    result.degrees_of_freedom = static_cast<int>(n) - 1;
    result.p_value = math::student_t_two_tailed(result.t_statistic, result.degrees_of_freedom);
    return result;
}

SessionFeatures session_feature_counts(const std::vector<BehaviourAnnotation>& behaviours,
                                       const std::vector<ConflictAnnotation>& conflicts,
                                       const Codebook& codebook,
                                       const std::optional<SurveyResponse>& survey) {
    SessionFeatures features;
    for (const auto& a : behaviours) {
        if (!a.unresolved_labels.empty())
            throw DomainError("session_feature_counts: behaviour_id " +
                              std::to_string(a.behaviour_id) +
                              " carries unresolved labels; resolve or drop flagged records first");
        for (const auto& key : a.codes) {
            ++features.behaviour_counts[key];
            switch (codebook.valence_of(key)) {
                case Valence::positive: ++features.valence_totals[0]; break;
                case Valence::neutral: ++features.valence_totals[1]; break;
                case Valence::negative: ++features.valence_totals[2]; break;
            }
        }
    }
    for (const auto& a : conflicts) {
        if (!a.conflict_key)
            throw DomainError("session_feature_counts: scene_id " + std::to_string(a.scene_id) +
                              " has an unresolved conflict type");
        ++features.conflict_counts[*a.conflict_key];
    }
    if (survey) {
        features.survey = survey;
        features.shift = emotion_shift(*survey);
    }
    return features;
}

DistributionSummary distribution_summary(const std::vector<SessionFeatures>& sessions,
                                         const Codebook& codebook) {
    if (sessions.empty()) throw DomainError("distribution_summary: no sessions");

    DistributionSummary summary;
    summary.n_sessions = sessions.size();
    const double n = static_cast<double>(sessions.size());

    std::array<long, 3> valence_totals{0, 0, 0};
    for (const auto& b : codebook.behaviours()) summary.mean_behaviour_counts[b.key] = 0.0;
    for (const auto& c : codebook.conflicts()) summary.mean_conflict_counts[c.key] = 0.0;

    for (const auto& s : sessions) {
        for (const auto& [key, count] : s.behaviour_counts) {
            summary.mean_behaviour_counts.at(key) += static_cast<double>(count);
            summary.total_behaviours += count;
        }
        for (const auto& [key, count] : s.conflict_counts) {
            summary.mean_conflict_counts.at(key) += static_cast<double>(count);
            summary.total_conflicts += count;
        }
        for (int k = 0; k < 3; ++k) valence_totals[k] += s.valence_totals[k];
    }
    for (auto& [key, sum] : summary.mean_behaviour_counts) sum /= n;
    for (auto& [key, sum] : summary.mean_conflict_counts) sum /= n;

    if (summary.total_behaviours > 0) {
        const double total = static_cast<double>(summary.total_behaviours);
        summary.valence_shares = {static_cast<double>(valence_totals[0]) / total,
                                  static_cast<double>(valence_totals[1]) / total,
                                  static_cast<double>(valence_totals[2]) / total};
    }
    return summary;
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw DomainError("pearson: need at least 3 observations");

    const double nx = static_cast<double>(n);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nx;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DomainError("pearson: undefined correlation for constant input");

    PearsonResult result;
    result.n = n;
    result.r = sxy / std::sqrt(sxx * syy);
    // Clamp fp spill just past the closed interval.
    result.r = std::clamp(result.r, -1.0, 1.0);

    const double denom = 1.0 - result.r * result.r;
    if (denom <= 0.0) {
        result.p_value = 0.0;
    } else {
        const double t = result.r * std::sqrt((nx - 2.0) / denom);
        result.p_value = math::student_t_two_tailed(t, static_cast<int>(n) - 2);
    }
    return result;
}

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

CorrelationMatrix correlation_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows,
    const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
    CorrelationMatrix matrix;
    std::size_t index_size = 0;
    bool first = true;
    for (const auto& [name, values] : rows) {
        if (first) {
            index_size = values.size();
            first = false;
        } else if (values.size() != index_size) {
            throw DomainError("correlation_matrix: row \"" + name + "\" has mismatched length");
        }
        matrix.row_names.push_back(name);
    }
    for (const auto& [name, values] : cols) {
        if (first) {
            index_size = values.size();
            first = false;
        } else if (values.size() != index_size) {
            throw DomainError("correlation_matrix: column \"" + name +
                              "\" has mismatched length");
        }
        matrix.col_names.push_back(name);
    }

    matrix.cells.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        matrix.cells[i].resize(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            try {
                const PearsonResult pr = pearson(rows[i].second, cols[j].second);
                matrix.cells[i][j] =
                    CorrelationCell{pr.r, pr.p_value, significance_stars(pr.p_value), pr.n};
            } catch (const DomainError&) {
                matrix.cells[i][j] = std::nullopt;  // flagged, not fabricated
            }
        }
    }
    return matrix;
}

// --- persistence -------------------------------------------------------------

void store_survey(const SurveyResponse& survey, const std::filesystem::path& path) {
    survey.validate();
    const json j = {{"pre",
                     {{"pleasure", survey.pre.pleasure},
                      {"arousal", survey.pre.arousal},
                      {"dominance", survey.pre.dominance}}},
                    {"post",
                     {{"pleasure", survey.post.pleasure},
                      {"arousal", survey.post.arousal},
                      {"dominance", survey.post.dominance}}}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

SurveyResponse load_survey(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
    SurveyResponse s;
    s.pre.pleasure = j.at("pre").at("pleasure").get<int>();
    s.pre.arousal = j.at("pre").at("arousal").get<int>();
    s.pre.dominance = j.at("pre").at("dominance").get<int>();
    s.post.pleasure = j.at("post").at("pleasure").get<int>();
    s.post.arousal = j.at("post").at("arousal").get<int>();
    s.post.dominance = j.at("post").at("dominance").get<int>();
    s.validate();
    return s;
}

void store_features_csv(const std::vector<SessionFeatures>& sessions, const Codebook& codebook,
                        const std::filesystem::path& path) {
    std::vector<csv::Row> rows;
    csv::Row header = {"participant_id", "date"};
    for (const auto& b : codebook.behaviours()) header.push_back(b.key);
    for (const auto& c : codebook.conflicts()) header.push_back(c.key);
    header.push_back("d_pleasure");
    header.push_back("d_arousal");
    header.push_back("d_dominance");
    rows.push_back(header);

    for (const auto& s : sessions) {
        csv::Row row = {s.participant_id, s.session_date};
        for (const auto& b : codebook.behaviours()) {
            const auto it = s.behaviour_counts.find(b.key);
            row.push_back(std::to_string(it == s.behaviour_counts.end() ? 0 : it->second));
        }
        for (const auto& c : codebook.conflicts()) {
            const auto it = s.conflict_counts.find(c.key);
            row.push_back(std::to_string(it == s.conflict_counts.end() ? 0 : it->second));
        }
        if (s.shift) {
            row.push_back(std::to_string(s.shift->d_pleasure));
            row.push_back(std::to_string(s.shift->d_arousal));
            row.push_back(std::to_string(s.shift->d_dominance));
        } else {
            row.insert(row.end(), {"", "", ""});
        }
        rows.push_back(std::move(row));
    }
    csv::write_file(path, rows);
}

}  // namespace convocode
