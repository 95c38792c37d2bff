#include "convocode/codebook.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "convocode/errors.hpp"

namespace convocode {

using nlohmann::json;

const char* to_string(Valence v) {
    switch (v) {
        case Valence::positive: return "positive";
        case Valence::neutral: return "neutral";
        case Valence::negative: return "negative";
    }
    return "neutral";
}

const char* to_string(Intensity i) {
    switch (i) {
        case Intensity::High: return "High";
        case Intensity::Medium: return "Medium";
        case Intensity::Low: return "Low";
    }
    return "Low";
}

namespace {

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
std::string normalize_label(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!in_space && !out.empty()) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

Valence parse_valence(const std::string& s) {
    if (s == "positive") return Valence::positive;
    if (s == "neutral") return Valence::neutral;
    if (s == "negative") return Valence::negative;
    throw ParseError("codebook: unknown valence \"" + s + "\"");
}

Intensity parse_intensity_name(const std::string& s) {
    const std::string n = normalize_label(s);
    if (n == "high") return Intensity::High;
    if (n == "medium") return Intensity::Medium;
    if (n == "low") return Intensity::Low;
    throw DomainError("invalid severity: " + s);
}

}  // namespace

Intensity parse_intensity(const std::string& text) { return parse_intensity_name(text); }

Codebook::Codebook(std::vector<BehaviourCode> behaviours, std::vector<ConflictType> conflicts,
                   std::array<IntensityLevel, 3> intensities, std::string version)
    : behaviours_(std::move(behaviours)),
      conflicts_(std::move(conflicts)),
      intensities_(std::move(intensities)),
      version_(std::move(version)) {
    if (behaviours_.size() != 18)
        throw DomainError("expected 18 behaviour codes, found " +
                          std::to_string(behaviours_.size()));
    if (conflicts_.size() != 7)
        throw DomainError("expected 7 conflict types, found " + std::to_string(conflicts_.size()));

    std::map<Valence, int> partition;
    std::set<std::string> abbrevs, names;
    for (const auto& b : behaviours_) {
        partition[b.valence]++;
        if (!abbrevs.insert(normalize_label(b.abbrev)).second)
            throw DomainError("duplicate behaviour abbrev \"" + b.abbrev + "\"");
        if (!names.insert(normalize_label(b.display_name)).second)
            throw DomainError("duplicate behaviour display name \"" + b.display_name + "\"");
    }
    if (partition[Valence::positive] != 6 || partition[Valence::neutral] != 6 ||
        partition[Valence::negative] != 6) {
        std::ostringstream oss;
        oss << "behaviour valence partition must be 6/6/6, found "
            << partition[Valence::positive] << "/" << partition[Valence::neutral] << "/"
            << partition[Valence::negative];
        throw DomainError(oss.str());
    }
    abbrevs.clear();
    names.clear();
    for (const auto& c : conflicts_) {
        if (!abbrevs.insert(normalize_label(c.abbrev)).second)
            throw DomainError("duplicate conflict abbrev \"" + c.abbrev + "\"");
        if (!names.insert(normalize_label(c.display_name)).second)
            throw DomainError("duplicate conflict display name \"" + c.display_name + "\"");
    }
}

std::string Codebook::resolve_code(const std::string& label_text, CodeNamespace ns) const {
    const std::string norm = normalize_label(label_text);
    auto matches = [&norm](const std::string& abbrev, const std::string& display) {
        if (norm == normalize_label(abbrev)) return true;
        if (norm == normalize_label(display)) return true;
        return norm == normalize_label(display + " (" + abbrev + ")");
    };
    if (ns == CodeNamespace::behaviour) {
        for (const auto& b : behaviours_)
            if (matches(b.abbrev, b.display_name)) return b.key;
    } else {
        for (const auto& c : conflicts_)
            if (matches(c.abbrev, c.display_name)) return c.key;
    }
    throw UnknownCodeError("unknown " +
                               std::string(ns == CodeNamespace::behaviour ? "behaviour" : "conflict") +
                               " code: \"" + label_text + "\"",
                           label_text);
}

Valence Codebook::valence_of(const std::string& key) const {
    return behaviour_by_key(key).valence;
}

const BehaviourCode& Codebook::behaviour_by_key(const std::string& key) const {
    for (const auto& b : behaviours_)
        if (b.key == key) return b;
    throw DomainError("not a behaviour key: \"" + key + "\"");
}

const ConflictType& Codebook::conflict_by_key(const std::string& key) const {
    for (const auto& c : conflicts_)
        if (c.key == key) return c;
    throw DomainError("not a conflict key: \"" + key + "\"");
}

bool Codebook::has_key(const std::string& key) const noexcept {
    for (const auto& b : behaviours_)
        if (b.key == key) return true;
    for (const auto& c : conflicts_)
        if (c.key == key) return true;
    return false;
}

namespace {

std::vector<std::string> parse_examples(const json& j) {
    std::vector<std::string> out;
    for (const auto& e : j) out.push_back(e.get<std::string>());
    return out;
}

}  // namespace

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("codebook: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, /*allow_exceptions=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError("codebook " + path.string() + ": " + e.what());
    }

    std::vector<BehaviourCode> behaviours;
    for (const auto& b : j.at("behaviours")) {
        BehaviourCode code;
        code.abbrev = b.at("abbrev").get<std::string>();
        code.key = "behaviour." + code.abbrev;
        code.display_name = b.at("display_name").get<std::string>();
        code.valence = parse_valence(b.at("valence").get<std::string>());
        code.definition = b.at("definition").get<std::string>();
        code.guideline = b.at("guideline").get<std::string>();
        code.examples = parse_examples(b.at("examples"));
        behaviours.push_back(std::move(code));
    }

    std::vector<ConflictType> conflicts;
    for (const auto& c : j.at("conflicts")) {
        ConflictType type;
        type.abbrev = c.at("abbrev").get<std::string>();
        type.key = "conflict." + type.abbrev;
        type.display_name = c.at("display_name").get<std::string>();
        type.definition = c.at("definition").get<std::string>();
        type.guideline = c.at("guideline").get<std::string>();
        type.examples = parse_examples(c.at("examples"));
        conflicts.push_back(std::move(type));
    }

    const auto& ints = j.at("intensities");
    if (ints.size() != 3)
        throw DomainError("expected 3 intensity levels, found " + std::to_string(ints.size()));
    std::array<IntensityLevel, 3> intensities;
    for (std::size_t i = 0; i < 3; ++i) {
        intensities[i].value = parse_intensity_name(ints[i].at("level").get<std::string>());
        intensities[i].criteria = ints[i].at("criteria").get<std::string>();
    }

    return Codebook(std::move(behaviours), std::move(conflicts), std::move(intensities),
                    j.at("version").get<std::string>());
}

void store_codebook(const Codebook& cb, const std::filesystem::path& path) {
    json j;
    j["version"] = cb.version();
    j["behaviours"] = json::array();
    for (const auto& b : cb.behaviours()) {
        j["behaviours"].push_back({{"abbrev", b.abbrev},
                                   {"display_name", b.display_name},
                                   {"valence", to_string(b.valence)},
                                   {"definition", b.definition},
                                   {"guideline", b.guideline},
                                   {"examples", b.examples}});
    }
    j["conflicts"] = json::array();
    for (const auto& c : cb.conflicts()) {
        j["conflicts"].push_back({{"abbrev", c.abbrev},
                                  {"display_name", c.display_name},
                                  {"definition", c.definition},
                                  {"guideline", c.guideline},
                                  {"examples", c.examples}});
    }
    j["intensities"] = json::array();
    for (const auto& level : cb.intensities()) {
        j["intensities"].push_back({{"level", to_string(level.value)},
                                    {"criteria", level.criteria}});
    }
    std::ofstream out(path);
    if (!out) throw Error("codebook: cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace convocode
