#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "convocode/transcript.hpp"

namespace convocode {

/// What the model is expected to return for a given template.
enum class OutputShape { record_list, role_map, behaviour_list, conflict_list };

const char* to_string(OutputShape s);

/// A named prompt with {{placeholder}} slots. Bodies are loaded verbatim
/// from the golden template files shipped in the data directory; rendering
/// never alters anything outside the placeholders.
struct PromptTemplate {
    std::string name;  // transcription_fix | role_recognition | behaviour_coding | conflict_coding
    std::string body;
    OutputShape expected_output_shape = OutputShape::record_list;

    /// FNV-1a hash of the body, recorded in run manifests as the template version.
    std::string version() const;
};

using PromptContext = std::map<std::string, std::string>;

/// Substitutes every {{name}} placeholder from the context. Deterministic;
/// throws ConfigError("unbound placeholder: <name>") when a placeholder has
/// no binding. Placeholder syntax inside bound values is not re-expanded.
std::string render_prompt(const PromptTemplate& tmpl, const PromptContext& context);

/// The four canonical templates, loaded from <dir>/<name>.txt.
struct TemplateSet {
    PromptTemplate transcription_fix;
    PromptTemplate role_recognition;
    PromptTemplate behaviour_coding;
    PromptTemplate conflict_coding;

    const PromptTemplate& by_name(const std::string& name) const;
};

TemplateSet load_templates(const std::filesystem::path& dir);

/// Renders utterances in the record-list form the templates expect:
/// a JSON array of {"id", "speaker", "content"} objects, one per line.
std::string render_records(const Transcript& t);
std::string render_records(const Transcript& t, int first_id, int last_id);

}  // namespace convocode
