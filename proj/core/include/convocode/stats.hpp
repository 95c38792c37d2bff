#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convocode/annotation.hpp"
#include "convocode/codebook.hpp"

namespace convocode {

/// Pre/post self-reported PAD triple, each dimension on the 1-5 scale.
struct PadTriple {
    int pleasure = 3;
    int arousal = 3;
    int dominance = 3;

    friend bool operator==(const PadTriple&, const PadTriple&) = default;
};

struct SurveyResponse {
    PadTriple pre;
    PadTriple post;

    void validate() const;  // throws DomainError when a value leaves [1, 5]

    friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

/// post - pre, componentwise; each component lies in [-4, 4].
struct EmotionShift {
    int d_pleasure = 0;
    int d_arousal = 0;
    int d_dominance = 0;

    friend bool operator==(const EmotionShift&, const EmotionShift&) = default;
};

EmotionShift emotion_shift(const SurveyResponse& s);

struct TTestResult {
    double t_statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;  // two-tailed
};

/// Paired sample t-test: t = mean(d) / (sd(d)/sqrt(n)) with d = post - pre
/// and the n-1 sample standard deviation; p two-tailed from Student's t
/// with n-1 df. Throws DomainError for n < 2 or zero-variance differences.
TTestResult paired_t_test(const std::vector<double>& pre, const std::vector<double>& post);

/// Per-session counts plus the derived valence totals.
struct SessionFeatures {
    std::string participant_id;
    std::string session_date;
    std::map<std::string, long> behaviour_counts;  // key -> count
    std::map<std::string, long> conflict_counts;
    std::array<long, 3> valence_totals{0, 0, 0};  // positive, neutral, negative
    std::optional<EmotionShift> shift;
    std::optional<SurveyResponse> survey;
};

/// Counts one occurrence per listed code of every annotation (a multi-code
/// record contributes to each of its codes); valence totals follow from the
/// codebook. Throws DomainError if any annotation still carries an
/// unresolved label — flagged records must be resolved or dropped first.
SessionFeatures session_feature_counts(const std::vector<BehaviourAnnotation>& behaviours,
                                       const std::vector<ConflictAnnotation>& conflicts,
                                       const Codebook& codebook,
                                       const std::optional<SurveyResponse>& survey);

struct DistributionSummary {
    std::size_t n_sessions = 0;
    long total_behaviours = 0;
    long total_conflicts = 0;
    std::map<std::string, double> mean_behaviour_counts;  // per codebook key
    std::map<std::string, double> mean_conflict_counts;
    /// Valence shares of all behaviours (positive, neutral, negative);
    /// absent when no behaviours were observed.
    std::optional<std::array<double, 3>> valence_shares;
};

/// Mean per-session count for each of the 18 + 7 codes plus overall valence
/// shares. Throws DomainError on an empty session list.
DistributionSummary distribution_summary(const std::vector<SessionFeatures>& sessions,
                                         const Codebook& codebook);

struct PearsonResult {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Sample Pearson correlation with a two-tailed p-value via
/// t = r*sqrt((n-2)/(1-r^2)) against Student's t with n-2 df. Throws
/// DomainError for n < 3, length mismatch, or constant input.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

/// "***" p<0.001, "**" p<0.01, "*" p<0.05, "" otherwise (strict bounds).
std::string significance_stars(double p);

struct CorrelationCell {
    double r = 0.0;
    double p_value = 1.0;
    std::string stars;
    std::size_t n = 0;
};

struct CorrelationMatrix {
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    /// cells[i][j] is empty when the correlation is undefined (constant input).
    std::vector<std::vector<std::optional<CorrelationCell>>> cells;
};

/// Pearson + stars for every (row, col) pair of named feature vectors over
/// the same session index. Constant vectors yield flagged (empty) cells.
/// Throws DomainError when vector lengths disagree.
CorrelationMatrix correlation_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows,
    const std::vector<std::pair<std::string, std::vector<double>>>& cols);

// --- survey persistence -----------------------------------------------------

void store_survey(const SurveyResponse& survey, const std::filesystem::path& path);
SurveyResponse load_survey(const std::filesystem::path& path);

/// Features file: one row per session with participant, date, the 18
/// behaviour counts, the 7 conflict counts, and the shift triple (blank
/// when the session has no survey).
void store_features_csv(const std::vector<SessionFeatures>& sessions, const Codebook& codebook,
                        const std::filesystem::path& path);

}  // namespace convocode
