#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace convocode {

/// One coding instance with the label each coder assigned to it.
struct LabelledInstance {
    std::string instance_id;
    std::map<std::string, std::string> labels_by_coder;
};

struct KappaResult {
    double kappa = 0.0;
    double observed_agreement = 0.0;  // p_o
    double expected_agreement = 0.0;  // p_e
    std::size_t n = 0;
};

struct ConfusionMatrix {
    std::vector<std::string> categories;
    std::vector<std::vector<long>> counts;  // rows = reference, cols = predicted

    long total() const;
    long trace() const;
};

struct ChiSquaredResult {
    double statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
};

/// Tie-break hook: called with the instance and the tied maximal labels,
/// must return one of them. The default policy (no callback) fails loudly.
struct ConsensusPolicy {
    std::function<std::string(const LabelledInstance&, const std::vector<std::string>&)>
        arbitration;
};

/// Cohen's kappa between two equal-length label sequences:
/// kappa = (p_o - p_e) / (1 - p_e), with p_e from the product of marginal
/// proportions summed over categories. Throws DomainError for a length
/// mismatch, empty input, or the degenerate case p_e = 1 (both sequences
/// constant and identical).
KappaResult cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Majority vote per instance; a unique maximal label wins outright, tied
/// maximal labels go to the arbitration callback (exactly once per tie).
/// Throws ContractError if arbitration returns a label outside the tied set
/// or no callback is configured for a tie.
std::map<std::string, std::string> consensus(const std::vector<LabelledInstance>& instances,
                                             const ConsensusPolicy& policy);

/// counts[i][j] = #{k : reference[k] = categories[i] and predicted[k] = categories[j]}.
ConfusionMatrix confusion_matrix(const std::vector<std::string>& reference,
                                 const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& categories);

/// Pearson chi-squared test of independence on the matrix, after dropping
/// all-zero rows and columns; p-value from the upper tail of the
/// chi-squared distribution (regularized incomplete gamma).
ChiSquaredResult chi_squared_independence(const ConfusionMatrix& m);

/// Table of pairwise kappas between all coders plus a "vs consensus" column.
struct KappaTable {
    std::vector<std::string> coders;
    std::map<std::pair<std::string, std::string>, KappaResult> pairwise;
    std::map<std::string, KappaResult> vs_consensus;
};

/// Pairwise kappa over instances (missing labels excluded pairwise) plus
/// each coder against the given consensus labels. Throws DomainError if a
/// coder pair has no overlapping instances.
KappaTable pairwise_kappa_table(const std::vector<LabelledInstance>& instances,
                                const std::map<std::string, std::string>& consensus_labels);

/// Reads the expert-label CSV (columns instance_id, coder_id, label) into
/// per-instance label maps, ordered by first appearance of instance_id.
std::vector<LabelledInstance> load_labelled_instances(const std::filesystem::path& csv_path);

}  // namespace convocode
