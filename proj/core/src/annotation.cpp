#include "convocode/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "convocode/errors.hpp"

namespace convocode {

using nlohmann::json;

const char* to_string(Role r) {
    switch (r) {
        case Role::parent: return "parent";
        case Role::child: return "child";
        case Role::others: return "others";
    }
    return "others";
}

Role parse_role(const std::string& s) {
    if (s == "parent") return Role::parent;
    if (s == "child") return Role::child;
    if (s == "others") return Role::others;
    throw DomainError("invalid role: " + s);
}

bool RoleMap::has_role(Role r) const {
    for (const auto& [label, role] : assignments)
        if (role == r) return true;
    return false;
}

RoleMap infer_roles(const Transcript& t, const Gateway& gateway, const TemplateSet& templates,
                    int max_utterances) {
    if (max_utterances > 0 && static_cast<int>(t.size()) > max_utterances)
        throw ConfigError("transcript exceeds role-recognition limit of " +
                          std::to_string(max_utterances) + " utterances");

    std::set<std::string> labels;
    for (const auto& u : t.utterances) labels.insert(u.speaker_label);

    const std::string prompt =
        render_prompt(templates.role_recognition, {{"transcript", render_records(t)}});
    const ChatExchange exchange = gateway.complete(prompt);
    const auto raw = std::get<RawRoleMap>(
        extract_structured_block(exchange.raw_response, OutputShape::role_map));

    RoleMap roles;
    for (const auto& [label, role_text] : raw) {
        const Role role = parse_role(role_text);
        if (role == Role::others && labels.size() < 3)
            throw ContractError("role \"others\" requires at least 3 distinct speakers");
        roles.assignments[label] = role;
    }
    for (const auto& label : labels) {
        if (!roles.assignments.count(label))
            throw ContractError("role map is missing speaker label \"" + label + "\"");
    }
    if (!roles.has_role(Role::parent) || !roles.has_role(Role::child))
        throw ContractError("role map must contain at least one parent and one child");
    return roles;
}

namespace {

std::vector<std::string> split_codes(const std::string& text) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == ',' || c == ';') {
            if (!current.empty()) parts.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) parts.push_back(current);
    // drop whitespace-only parts
    std::erase_if(parts, [](const std::string& p) {
        return p.find_first_not_of(" \t\r\n") == std::string::npos;
    });
    return parts;
}

void check_span(int start_id, int end_id, int transcript_size, const std::string& id_name,
                int id_value, ValidationReport& report) {
    const std::string locus = id_name + " " + std::to_string(id_value);
    if (start_id > end_id) {
        report.add(Severity::error, "span reversed at " + id_name + " " + std::to_string(id_value),
                   locus);
        return;
    }
    if (start_id < 1 || end_id > transcript_size)
        report.add(Severity::error,
                   "span [" + std::to_string(start_id) + ", " + std::to_string(end_id) +
                       "] outside transcript (1.." + std::to_string(transcript_size) + ") at " +
                       id_name + " " + std::to_string(id_value),
                   locus);
}

}  // namespace

CodingResult<BehaviourAnnotation> code_behaviours(const Transcript& t, const RoleMap& roles,
                                                  const Codebook& codebook,
                                                  const Gateway& gateway,
                                                  const TemplateSet& templates) {
    if (!roles.has_role(Role::parent))
        throw ContractError("behaviour coding requires a parent in the role map");

    const std::string prompt =
        render_prompt(templates.behaviour_coding, {{"transcript", render_records(t)}});
    const ChatExchange exchange = gateway.complete(prompt);
    const auto raw = std::get<std::vector<RawBehaviourRecord>>(
        extract_structured_block(exchange.raw_response, OutputShape::behaviour_list));

    CodingResult<BehaviourAnnotation> result;
    for (const auto& rec : raw) {
        BehaviourAnnotation a;
        a.behaviour_id = rec.behaviour_id;
        a.start_id = rec.start_id;
        a.end_id = rec.end_id;
        a.description = rec.description;
        a.parent_utterance = rec.parent_utterance;
        a.raw_code = rec.code;

        check_span(a.start_id, a.end_id, static_cast<int>(t.size()), "behaviour_id",
                   a.behaviour_id, result.report);

        for (const auto& part : split_codes(rec.code)) {
            try {
                a.codes.push_back(codebook.resolve_code(part, CodeNamespace::behaviour));
            } catch (const UnknownCodeError&) {
                a.unresolved_labels.push_back(part);
                result.report.add(Severity::warning,
                                  "unknown behaviour code \"" + part + "\" at behaviour_id " +
                                      std::to_string(a.behaviour_id),
                                  "behaviour_id " + std::to_string(a.behaviour_id));
            }
        }
        result.annotations.push_back(std::move(a));
    }

    std::stable_sort(result.annotations.begin(), result.annotations.end(),
                     [](const BehaviourAnnotation& x, const BehaviourAnnotation& y) {
                         if (x.start_id != y.start_id) return x.start_id < y.start_id;
                         return x.behaviour_id < y.behaviour_id;
                     });
    result.report.sort();
    return result;
}

CodingResult<ConflictAnnotation> code_conflicts(const Transcript& t, const RoleMap& roles,
                                                const Codebook& codebook, const Gateway& gateway,
                                                const TemplateSet& templates) {
    if (!roles.has_role(Role::parent))
        throw ContractError("conflict coding requires a parent in the role map");

    const std::string prompt =
        render_prompt(templates.conflict_coding, {{"transcript", render_records(t)}});
    const ChatExchange exchange = gateway.complete(prompt);
    const auto raw = std::get<std::vector<RawConflictRecord>>(
        extract_structured_block(exchange.raw_response, OutputShape::conflict_list));

    CodingResult<ConflictAnnotation> result;
    for (const auto& rec : raw) {
        ConflictAnnotation a;
        a.scene_id = rec.scene_id;
        a.start_id = rec.start_id;
        a.end_id = rec.end_id;
        a.trigger = rec.trigger;
        a.process = rec.process;
        a.parent_behavior = rec.parent_behavior;
        a.child_behavior = rec.child_behavior;
        a.raw_conflict_type = rec.conflict_type;
        a.raw_severity = rec.severity;

        check_span(a.start_id, a.end_id, static_cast<int>(t.size()), "scene_id", a.scene_id,
                   result.report);

        try {
            a.conflict_key = codebook.resolve_code(rec.conflict_type, CodeNamespace::conflict);
        } catch (const UnknownCodeError&) {
            result.report.add(Severity::warning,
                              "unknown conflict type \"" + rec.conflict_type + "\" at scene_id " +
                                  std::to_string(a.scene_id),
                              "scene_id " + std::to_string(a.scene_id));
        }
        try {
            a.severity = parse_intensity(rec.severity);
        } catch (const DomainError&) {
            result.report.add(Severity::error,
                              "invalid severity: " + rec.severity,
                              "scene_id " + std::to_string(a.scene_id));
        }
        result.annotations.push_back(std::move(a));
    }

    std::stable_sort(result.annotations.begin(), result.annotations.end(),
                     [](const ConflictAnnotation& x, const ConflictAnnotation& y) {
                         if (x.start_id != y.start_id) return x.start_id < y.start_id;
                         return x.scene_id < y.scene_id;
                     });
    result.report.sort();
    return result;
}

ValidationReport validate_annotations(const std::vector<BehaviourAnnotation>& behaviours,
                                      const std::vector<ConflictAnnotation>& conflicts,
                                      const Transcript& t, const Codebook& codebook) {
    ValidationReport report;
    const int n = static_cast<int>(t.size());

    std::set<int> behaviour_ids;
    for (const auto& a : behaviours) {
        check_span(a.start_id, a.end_id, n, "behaviour_id", a.behaviour_id, report);
        if (!behaviour_ids.insert(a.behaviour_id).second)
            report.add(Severity::warning,
                       "duplicate behaviour_id " + std::to_string(a.behaviour_id),
                       "behaviour_id " + std::to_string(a.behaviour_id));
        for (const auto& key : a.codes) {
            if (!codebook.has_key(key))
                report.add(Severity::error,
                           "unresolvable code key \"" + key + "\" at behaviour_id " +
                               std::to_string(a.behaviour_id),
                           "behaviour_id " + std::to_string(a.behaviour_id));
        }
        for (const auto& label : a.unresolved_labels)
            report.add(Severity::warning,
                       "unknown behaviour code \"" + label + "\" at behaviour_id " +
                           std::to_string(a.behaviour_id),
                       "behaviour_id " + std::to_string(a.behaviour_id));
    }

    std::set<int> scene_ids;
    for (const auto& a : conflicts) {
        check_span(a.start_id, a.end_id, n, "scene_id", a.scene_id, report);
        if (!scene_ids.insert(a.scene_id).second)
            report.add(Severity::warning, "duplicate scene_id " + std::to_string(a.scene_id),
                       "scene_id " + std::to_string(a.scene_id));
        if (a.conflict_key && !codebook.has_key(*a.conflict_key))
            report.add(Severity::error,
                       "unresolvable conflict key \"" + *a.conflict_key + "\" at scene_id " +
                           std::to_string(a.scene_id),
                       "scene_id " + std::to_string(a.scene_id));
        if (!a.conflict_key)
            report.add(Severity::warning,
                       "unknown conflict type \"" + a.raw_conflict_type + "\" at scene_id " +
                           std::to_string(a.scene_id),
                       "scene_id " + std::to_string(a.scene_id));
        if (!a.severity)
            report.add(Severity::error, "invalid severity: " + a.raw_severity,
                       "scene_id " + std::to_string(a.scene_id));
    }

    report.sort();
    return report;
}

// --- persistence -------------------------------------------------------------

namespace {

json behaviour_to_json(const BehaviourAnnotation& a) {
    json j;
    j["behaviour_id"] = a.behaviour_id;
    j["Start ID"] = a.start_id;
    j["End ID"] = a.end_id;
    j["Description of behavior"] = a.description;
    j["Parent Behavior"] = a.parent_utterance;
    j["code"] = a.raw_code;
    j["resolved_codes"] = a.codes;
    if (!a.unresolved_labels.empty()) j["unresolved_labels"] = a.unresolved_labels;
    return j;
}

json conflict_to_json(const ConflictAnnotation& a) {
    json j;
    j["scene_id"] = a.scene_id;
    j["Start ID"] = a.start_id;
    j["End ID"] = a.end_id;
    j["trigger"] = a.trigger;
    j["process"] = a.process;
    j["parent_behavior"] = a.parent_behavior;
    j["child_behavior"] = a.child_behavior;
    j["conflict_type"] = a.raw_conflict_type;
    j["severity"] = a.raw_severity;
    j["resolved_codes"] = a.conflict_key ? json::array({*a.conflict_key}) : json::array();
    return j;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

void store_behaviours(const std::vector<BehaviourAnnotation>& annotations,
                      const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& a : annotations) arr.push_back(behaviour_to_json(a));
    write_json_file(arr, path);
}

std::vector<BehaviourAnnotation> load_behaviours(const std::filesystem::path& path) {
    const json arr = load_json_file(path);
    std::vector<BehaviourAnnotation> out;
    for (const auto& j : arr) {
        BehaviourAnnotation a;
        a.behaviour_id = j.at("behaviour_id").get<int>();
        a.start_id = j.at("Start ID").get<int>();
        a.end_id = j.at("End ID").get<int>();
        a.description = j.at("Description of behavior").get<std::string>();
        a.parent_utterance = j.value("Parent Behavior", "");
        a.raw_code = j.at("code").get<std::string>();
        a.codes = j.at("resolved_codes").get<std::vector<std::string>>();
        if (j.contains("unresolved_labels"))
            a.unresolved_labels = j["unresolved_labels"].get<std::vector<std::string>>();
        out.push_back(std::move(a));
    }
    return out;
}

void store_conflicts(const std::vector<ConflictAnnotation>& annotations,
                     const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& a : annotations) arr.push_back(conflict_to_json(a));
    write_json_file(arr, path);
}

std::vector<ConflictAnnotation> load_conflicts(const std::filesystem::path& path) {
    const json arr = load_json_file(path);
    std::vector<ConflictAnnotation> out;
    for (const auto& j : arr) {
        ConflictAnnotation a;
        a.scene_id = j.at("scene_id").get<int>();
        a.start_id = j.at("Start ID").get<int>();
        a.end_id = j.at("End ID").get<int>();
        a.trigger = j.at("trigger").get<std::string>();
        a.process = j.at("process").get<std::string>();
        a.parent_behavior = j.at("parent_behavior").get<std::string>();
        a.child_behavior = j.at("child_behavior").get<std::string>();
        a.raw_conflict_type = j.at("conflict_type").get<std::string>();
        a.raw_severity = j.at("severity").get<std::string>();
        const auto resolved = j.at("resolved_codes").get<std::vector<std::string>>();
        if (!resolved.empty()) a.conflict_key = resolved.front();
        try {
            a.severity = parse_intensity(a.raw_severity);
        } catch (const DomainError&) {
            // left unset; validate_annotations reports it
        }
        out.push_back(std::move(a));
    }
    return out;
}

void store_roles(const RoleMap& roles, const std::filesystem::path& path) {
    json j = json::object();
    for (const auto& [label, role] : roles.assignments) j[label] = to_string(role);
    write_json_file(j, path);
}

RoleMap load_roles(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    RoleMap roles;
    for (const auto& [label, role] : j.items())
        roles.assignments[label] = parse_role(role.get<std::string>());
    return roles;
}

}  // namespace convocode
