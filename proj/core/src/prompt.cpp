#include "convocode/prompt.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "convocode/errors.hpp"

namespace convocode {

const char* to_string(OutputShape s) {
    switch (s) {
        case OutputShape::record_list: return "record_list";
        case OutputShape::role_map: return "role_map";
        case OutputShape::behaviour_list: return "behaviour_list";
        case OutputShape::conflict_list: return "conflict_list";
    }
    return "record_list";
}

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("template file not found: " + path.string());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

}  // namespace

std::string PromptTemplate::version() const {
    std::ostringstream oss;
    oss << std::hex << fnv1a(body);
    return oss.str();
}

std::string render_prompt(const PromptTemplate& tmpl, const PromptContext& context) {
    std::string out;
    out.reserve(tmpl.body.size());
    const std::string& body = tmpl.body;
    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t open = body.find("{{", pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        const std::size_t close = body.find("}}", open + 2);
        if (close == std::string::npos) {
            // Unterminated braces are literal text.
            out.append(body, open, std::string::npos);
            break;
        }
        const std::string name = body.substr(open + 2, close - open - 2);
        const auto it = context.find(name);
        if (it == context.end())
            throw ConfigError("unbound placeholder: " + name);
        out += it->second;
        pos = close + 2;
    }
    return out;
}

const PromptTemplate& TemplateSet::by_name(const std::string& name) const {
    if (name == "transcription_fix") return transcription_fix;
    if (name == "role_recognition") return role_recognition;
    if (name == "behaviour_coding") return behaviour_coding;
    if (name == "conflict_coding") return conflict_coding;
    throw ConfigError("unknown template name: " + name);
}

TemplateSet load_templates(const std::filesystem::path& dir) {
    TemplateSet set;
    set.transcription_fix = {"transcription_fix", read_file(dir / "transcription_fix.txt"),
                             OutputShape::record_list};
    set.role_recognition = {"role_recognition", read_file(dir / "role_recognition.txt"),
                            OutputShape::role_map};
    set.behaviour_coding = {"behaviour_coding", read_file(dir / "behaviour_coding.txt"),
                            OutputShape::behaviour_list};
    set.conflict_coding = {"conflict_coding", read_file(dir / "conflict_coding.txt"),
                           OutputShape::conflict_list};
    return set;
}

std::string render_records(const Transcript& t) {
    if (t.empty()) return "[]";
    return render_records(t, t.utterances.front().id, t.utterances.back().id);
}

std::string render_records(const Transcript& t, int first_id, int last_id) {
    std::string out = "[\n";
    bool any = false;
    for (const auto& u : t.utterances) {
        if (u.id < first_id || u.id > last_id) continue;
        nlohmann::json rec = {{"id", u.id}, {"speaker", u.speaker_label}, {"content", u.content}};
        if (any) out += ",\n";
        out += "    ";
        out += rec.dump();
        any = true;
    }
    out += "\n]";
    if (!any) return "[]";
    return out;
}

}  // namespace convocode
