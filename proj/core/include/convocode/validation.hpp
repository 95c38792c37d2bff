#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace convocode {

enum class Severity { warning, error };

inline const char* to_string(Severity s) {
    return s == Severity::warning ? "warning" : "error";
}

/// One violated invariant or anomaly, anchored to a locus ("utterance 3",
/// "behaviour_id 2", "chunk 0", ...).
struct Finding {
    Severity severity = Severity::warning;
    std::string message;
    std::string locus;

    friend bool operator==(const Finding&, const Finding&) = default;
};

/// Validation never throws; it accumulates findings. Deterministic ordering
/// by locus is established by sort().
struct ValidationReport {
    std::vector<Finding> findings;

    bool empty() const noexcept { return findings.empty(); }

    bool has_errors() const noexcept {
        return std::any_of(findings.begin(), findings.end(),
                           [](const Finding& f) { return f.severity == Severity::error; });
    }

    std::size_t count(Severity s) const noexcept {
        return static_cast<std::size_t>(
            std::count_if(findings.begin(), findings.end(),
                          [s](const Finding& f) { return f.severity == s; }));
    }

    void add(Severity severity, std::string message, std::string locus) {
        findings.push_back({severity, std::move(message), std::move(locus)});
    }

    void merge(const ValidationReport& other) {
        findings.insert(findings.end(), other.findings.begin(), other.findings.end());
    }

    /// Stable sort by (locus, severity, message) for deterministic output.
    void sort() {
        std::stable_sort(findings.begin(), findings.end(),
                         [](const Finding& a, const Finding& b) {
                             if (a.locus != b.locus) return a.locus < b.locus;
                             if (a.severity != b.severity)
                                 return a.severity == Severity::error;
                             return a.message < b.message;
                         });
    }
};

}  // namespace convocode
