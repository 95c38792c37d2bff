#include "convocode/agreement.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "convocode/csv.hpp"
#include "convocode/errors.hpp"
#include "convocode/special_functions.hpp"

namespace convocode {

long ConfusionMatrix::total() const {
    long sum = 0;
    for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
    return sum;
}

long ConfusionMatrix::trace() const {
    long sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
    return sum;
}

KappaResult cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size())
        throw DomainError("cohens_kappa: length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    if (a.empty()) throw DomainError("cohens_kappa: empty input");

    const double n = static_cast<double>(a.size());
    std::size_t matches = 0;
    std::map<std::string, std::size_t> count_a, count_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++matches;
        ++count_a[a[i]];
        ++count_b[b[i]];
    }

    const double p_o = static_cast<double>(matches) / n;
    double p_e = 0.0;
    for (const auto& [label, ca] : count_a) {
        const auto it = count_b.find(label);
        if (it == count_b.end()) continue;
        p_e += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
    }

    if (p_e >= 1.0)
        throw DomainError("cohens_kappa: degenerate distribution (both sequences constant and "
                          "identical, p_e = 1)");

    KappaResult result;
    result.observed_agreement = p_o;
    result.expected_agreement = p_e;
    result.n = a.size();
    result.kappa = (p_o - p_e) / (1.0 - p_e);
    return result;
}

std::map<std::string, std::string> consensus(const std::vector<LabelledInstance>& instances,
                                             const ConsensusPolicy& policy) {
    std::map<std::string, std::string> out;
    for (const auto& instance : instances) {
        if (instance.labels_by_coder.empty())
            throw DomainError("consensus: instance \"" + instance.instance_id +
                              "\" has no coder labels");

        std::map<std::string, int> votes;
        for (const auto& [coder, label] : instance.labels_by_coder) ++votes[label];

        int best = 0;
        for (const auto& [label, count] : votes) best = std::max(best, count);
        std::vector<std::string> tied;
        for (const auto& [label, count] : votes)
            if (count == best) tied.push_back(label);

        if (tied.size() == 1) {
            out[instance.instance_id] = tied.front();
            continue;
        }
        if (!policy.arbitration)
            throw ContractError("consensus: tie on instance \"" + instance.instance_id +
                                "\" and no arbitration callback configured");
        const std::string chosen = policy.arbitration(instance, tied);
        if (std::find(tied.begin(), tied.end(), chosen) == tied.end())
            throw ContractError("consensus: arbitration returned \"" + chosen +
                                "\" which is not among the tied labels of instance \"" +
                                instance.instance_id + "\"");
        out[instance.instance_id] = chosen;
    }
    return out;
}

ConfusionMatrix confusion_matrix(const std::vector<std::string>& reference,
                                 const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& categories) {
    if (reference.size() != predicted.size())
        throw DomainError("confusion_matrix: length mismatch");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < categories.size(); ++i) index[categories[i]] = i;

    ConfusionMatrix m;
    m.categories = categories;
    m.counts.assign(categories.size(), std::vector<long>(categories.size(), 0));
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const auto ri = index.find(reference[k]);
        if (ri == index.end())
            throw DomainError("confusion_matrix: label \"" + reference[k] +
                              "\" not in categories");
        const auto ci = index.find(predicted[k]);
        if (ci == index.end())
            throw DomainError("confusion_matrix: label \"" + predicted[k] +
                              "\" not in categories");
        ++m.counts[ri->second][ci->second];
    }
    return m;
}

ChiSquaredResult chi_squared_independence(const ConfusionMatrix& m) {
    if (m.total() < 1) throw DomainError("chi_squared_independence: empty matrix");

    // Drop all-zero rows and columns before computing df.
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < m.counts.size(); ++i) {
        if (std::accumulate(m.counts[i].begin(), m.counts[i].end(), 0L) > 0) rows.push_back(i);
    }
    for (std::size_t j = 0; j < m.categories.size(); ++j) {
        long col = 0;
        for (std::size_t i = 0; i < m.counts.size(); ++i) col += m.counts[i][j];
        if (col > 0) cols.push_back(j);
    }
    const int df = (static_cast<int>(rows.size()) - 1) * (static_cast<int>(cols.size()) - 1);
    if (df == 0)
        throw DomainError("chi_squared_independence: only one nonempty row or column (df = 0)");

    std::vector<double> row_sum(rows.size(), 0.0), col_sum(cols.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double o = static_cast<double>(m.counts[rows[i]][cols[j]]);
            row_sum[i] += o;
            col_sum[j] += o;
            total += o;
        }
    }

    double statistic = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double expected = row_sum[i] * col_sum[j] / total;
            const double observed = static_cast<double>(m.counts[rows[i]][cols[j]]);
            const double diff = observed - expected;
            statistic += diff * diff / expected;
        }
    }

    ChiSquaredResult result;
    result.statistic = statistic;
    result.degrees_of_freedom = df;
    result.p_value = math::chi_squared_upper_tail(statistic, df);
    return result;
}

KappaTable pairwise_kappa_table(const std::vector<LabelledInstance>& instances,
                                const std::map<std::string, std::string>& consensus_labels) {
    std::set<std::string> coder_set;
    for (const auto& instance : instances)
        for (const auto& [coder, label] : instance.labels_by_coder) coder_set.insert(coder);
    if (coder_set.size() < 2)
        throw DomainError("pairwise_kappa_table: need at least 2 coders, found " +
                          std::to_string(coder_set.size()));

    KappaTable table;
    table.coders.assign(coder_set.begin(), coder_set.end());

    // Pairwise cells: instances missing either coder's label excluded pairwise.
    for (std::size_t i = 0; i < table.coders.size(); ++i) {
        for (std::size_t j = i + 1; j < table.coders.size(); ++j) {
            const std::string& ca = table.coders[i];
            const std::string& cb = table.coders[j];
            std::vector<std::string> a, b;
            for (const auto& instance : instances) {
                const auto ia = instance.labels_by_coder.find(ca);
                const auto ib = instance.labels_by_coder.find(cb);
                if (ia == instance.labels_by_coder.end() || ib == instance.labels_by_coder.end())
                    continue;
                a.push_back(ia->second);
                b.push_back(ib->second);
            }
            if (a.empty())
                throw DomainError("pairwise_kappa_table: no overlapping instances for coders \"" +
                                  ca + "\" and \"" + cb + "\"");
            table.pairwise[{ca, cb}] = cohens_kappa(a, b);
        }
    }

    for (const auto& coder : table.coders) {
        std::vector<std::string> a, b;
        for (const auto& instance : instances) {
            const auto ia = instance.labels_by_coder.find(coder);
            const auto ic = consensus_labels.find(instance.instance_id);
            if (ia == instance.labels_by_coder.end() || ic == consensus_labels.end()) continue;
            a.push_back(ia->second);
            b.push_back(ic->second);
        }
        if (a.empty())
            throw DomainError("pairwise_kappa_table: no overlapping instances for coder \"" +
                              coder + "\" and the consensus");
        table.vs_consensus[coder] = cohens_kappa(a, b);
    }
    return table;
}

std::vector<LabelledInstance> load_labelled_instances(const std::filesystem::path& csv_path) {
    const auto rows = csv::read_file(csv_path);
    if (rows.empty()) throw ParseError(csv_path.string() + ": empty label file");
    const auto& header = rows.front();
    if (header.size() < 3 || header[0] != "instance_id" || header[1] != "coder_id" ||
        header[2] != "label")
        throw ParseError(csv_path.string() +
                         ": expected header instance_id,coder_id,label");

    std::vector<LabelledInstance> instances;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() < 3)
            throw ParseError(csv_path.string() + ": row " + std::to_string(r + 1) +
                             " has fewer than 3 fields");
        const auto it = index.find(row[0]);
        if (it == index.end()) {
            index[row[0]] = instances.size();
            instances.push_back({row[0], {{row[1], row[2]}}});
        } else {
            instances[it->second].labels_by_coder[row[1]] = row[2];
        }
    }
    return instances;
}

}  // namespace convocode
