#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace convocode {

enum class Valence { positive, neutral, negative };

const char* to_string(Valence v);

enum class CodeNamespace { behaviour, conflict };

/// One canonical parental-behaviour code. The key is namespaced
/// ("behaviour.LP") because behaviour and conflict abbreviations collide.
struct BehaviourCode {
    std::string key;           // "behaviour.<ABBREV>"
    std::string abbrev;        // "LP"
    std::string display_name;  // "Labelled Praise"
    Valence valence = Valence::neutral;
    std::string definition;
    std::string guideline;
    std::vector<std::string> examples;
};

struct ConflictType {
    std::string key;  // "conflict.<ABBREV>"
    std::string abbrev;
    std::string display_name;
    std::string definition;
    std::string guideline;
    std::vector<std::string> examples;
};

enum class Intensity { High, Medium, Low };

const char* to_string(Intensity i);

struct IntensityLevel {
    Intensity value = Intensity::Low;
    std::string criteria;  // tone, severity of language, length, body language
};

/// Immutable after load; all lookups are pure and thread-safe.
class Codebook {
public:
    Codebook(std::vector<BehaviourCode> behaviours, std::vector<ConflictType> conflicts,
             std::array<IntensityLevel, 3> intensities, std::string version);

    const std::vector<BehaviourCode>& behaviours() const noexcept { return behaviours_; }
    const std::vector<ConflictType>& conflicts() const noexcept { return conflicts_; }
    const std::array<IntensityLevel, 3>& intensities() const noexcept { return intensities_; }
    const std::string& version() const noexcept { return version_; }

    /// Resolves a free-text label (bare abbrev, full display name, or the
    /// combined "Display Name (ABBREV)" form; case-insensitive,
    /// whitespace-tolerant) to its namespaced key. Throws UnknownCodeError
    /// when nothing matches.
    std::string resolve_code(const std::string& label_text, CodeNamespace ns) const;

    /// Valence class of a behaviour key; throws DomainError for keys outside
    /// the behaviour namespace.
    Valence valence_of(const std::string& key) const;

    const BehaviourCode& behaviour_by_key(const std::string& key) const;
    const ConflictType& conflict_by_key(const std::string& key) const;
    bool has_key(const std::string& key) const noexcept;

private:
    std::vector<BehaviourCode> behaviours_;
    std::vector<ConflictType> conflicts_;
    std::array<IntensityLevel, 3> intensities_;
    std::string version_;
};

/// Parses and fully validates a codebook file (JSON with top-level
/// "behaviours", "conflicts", "intensities", "version"). Cardinalities are
/// enforced: exactly 18 behaviours with a 6/6/6 valence partition and
/// exactly 7 conflict types; duplicate abbrevs or display names are errors.
Codebook load_codebook(const std::filesystem::path& path);

/// Serializes a codebook back to its file format (lossless round-trip).
void store_codebook(const Codebook& cb, const std::filesystem::path& path);

/// Normalizes severity text ("high", " MEDIUM ") to the canonical intensity
/// level. Throws DomainError for values outside the three-level scale.
Intensity parse_intensity(const std::string& text);

}  // namespace convocode
