#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convocode/codebook.hpp"
#include "convocode/gateway.hpp"
#include "convocode/transcript.hpp"
#include "convocode/validation.hpp"

namespace convocode {

enum class Role { parent, child, others };

const char* to_string(Role r);
Role parse_role(const std::string& s);  // throws DomainError on anything else

struct RoleMap {
    std::map<std::string, Role> assignments;  // speaker_label -> role

    bool has_role(Role r) const;

    friend bool operator==(const RoleMap&, const RoleMap&) = default;
};

/// Span-anchored parental-behaviour annotation. `codes` holds the resolved
/// namespaced keys; a multi-code label like "SR, CB" resolves to two
/// entries. `unresolved_labels` keeps any part that did not resolve — such
/// records are never silently dropped, they surface as findings.
struct BehaviourAnnotation {
    int behaviour_id = 0;
    int start_id = 0;
    int end_id = 0;
    std::string description;
    std::string parent_utterance;
    std::string raw_code;  // label text exactly as returned
    std::vector<std::string> codes;
    std::vector<std::string> unresolved_labels;

    friend bool operator==(const BehaviourAnnotation&, const BehaviourAnnotation&) = default;
};

struct ConflictAnnotation {
    int scene_id = 0;
    int start_id = 0;
    int end_id = 0;
    std::string trigger;
    std::string process;
    std::string parent_behavior;
    std::string child_behavior;
    std::string raw_conflict_type;
    std::string raw_severity;
    std::optional<std::string> conflict_key;  // resolved "conflict.<ABBREV>"
    std::optional<Intensity> severity;

    friend bool operator==(const ConflictAnnotation&, const ConflictAnnotation&) = default;
};

template <typename Annotation>
struct CodingResult {
    std::vector<Annotation> annotations;
    ValidationReport report;
};

/// Runs the role-recognition prompt over the whole transcript and validates
/// the returned map: every speaker label assigned, roles within
/// {parent, child, others}, "others" only with >= 3 distinct labels, and at
/// least one parent and one child present. Throws ContractError otherwise.
RoleMap infer_roles(const Transcript& t, const Gateway& gateway, const TemplateSet& templates,
                    int max_utterances = 0);

/// Behaviour coding over the whole transcript. Records with unknown codes or
/// invalid spans are kept and flagged; annotations are sorted by
/// (start_id, behaviour_id).
CodingResult<BehaviourAnnotation> code_behaviours(const Transcript& t, const RoleMap& roles,
                                                  const Codebook& codebook,
                                                  const Gateway& gateway,
                                                  const TemplateSet& templates);

/// Conflict coding; zero conflicts is a valid outcome. Severity is
/// normalized case-insensitively onto {High, Medium, Low}; out-of-scale
/// values and unknown conflict labels are flagged.
CodingResult<ConflictAnnotation> code_conflicts(const Transcript& t, const RoleMap& roles,
                                                const Codebook& codebook, const Gateway& gateway,
                                                const TemplateSet& templates);

/// Pure re-validation of (possibly stored) annotations against a transcript
/// and codebook: spans, id monotonicity, code resolvability. Never throws.
ValidationReport validate_annotations(const std::vector<BehaviourAnnotation>& behaviours,
                                      const std::vector<ConflictAnnotation>& conflicts,
                                      const Transcript& t, const Codebook& codebook);

// --- persistence (field names match the model output contracts) -------------

void store_behaviours(const std::vector<BehaviourAnnotation>& annotations,
                      const std::filesystem::path& path);
std::vector<BehaviourAnnotation> load_behaviours(const std::filesystem::path& path);

void store_conflicts(const std::vector<ConflictAnnotation>& annotations,
                     const std::filesystem::path& path);
std::vector<ConflictAnnotation> load_conflicts(const std::filesystem::path& path);

void store_roles(const RoleMap& roles, const std::filesystem::path& path);
RoleMap load_roles(const std::filesystem::path& path);

}  // namespace convocode
