#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "convocode/codebook.hpp"
#include "convocode/errors.hpp"
#include "test_util.hpp"

using namespace convocode;

namespace {

std::filesystem::path shipped_codebook() {
    return std::filesystem::path(CONVOCODE_DATA_DIR) / "codebook.json";
}

}  // namespace

TEST_CASE("shipped codebook loads with the expected cardinalities") {
    const Codebook cb = load_codebook(shipped_codebook());
    CHECK(cb.behaviours().size() == 18);
    CHECK(cb.conflicts().size() == 7);
    CHECK(cb.intensities().size() == 3);
    CHECK_FALSE(cb.version().empty());

    int positive = 0, neutral = 0, negative = 0;
    for (const auto& b : cb.behaviours()) {
        switch (b.valence) {
            case Valence::positive: ++positive; break;
            case Valence::neutral: ++neutral; break;
            case Valence::negative: ++negative; break;
        }
    }
    CHECK(positive == 6);
    CHECK(neutral == 6);
    CHECK(negative == 6);
}

TEST_CASE("every abbrev, display name, and combined form resolves") {
    const Codebook cb = load_codebook(shipped_codebook());
    for (const auto& b : cb.behaviours()) {
        CHECK(cb.resolve_code(b.abbrev, CodeNamespace::behaviour) == b.key);
        CHECK(cb.resolve_code(b.display_name, CodeNamespace::behaviour) == b.key);
        CHECK(cb.resolve_code(b.display_name + " (" + b.abbrev + ")",
                              CodeNamespace::behaviour) == b.key);
    }
    for (const auto& c : cb.conflicts()) {
        CHECK(cb.resolve_code(c.abbrev, CodeNamespace::conflict) == c.key);
        CHECK(cb.resolve_code(c.display_name, CodeNamespace::conflict) == c.key);
        CHECK(cb.resolve_code(c.display_name + " (" + c.abbrev + ")", CodeNamespace::conflict) ==
              c.key);
    }
}

TEST_CASE("resolution is case-insensitive and whitespace-tolerant") {
    const Codebook cb = load_codebook(shipped_codebook());
    CHECK(cb.resolve_code("labelled praise (lp)", CodeNamespace::behaviour) == "behaviour.LP");
    CHECK(cb.resolve_code("  Labelled   Praise  ", CodeNamespace::behaviour) == "behaviour.LP");
    CHECK(cb.resolve_code("\tGI\n", CodeNamespace::behaviour) == "behaviour.GI");
}

TEST_CASE("the EC abbreviation collision resolves by namespace") {
    const Codebook cb = load_codebook(shipped_codebook());
    CHECK(cb.resolve_code("EC", CodeNamespace::conflict) == "conflict.EC");
    CHECK(cb.resolve_code("EC", CodeNamespace::behaviour) == "behaviour.EC");
    CHECK(cb.conflict_by_key("conflict.EC").display_name == "Expectation Conflict");
    CHECK(cb.behaviour_by_key("behaviour.EC").display_name == "Error Correction");
}

TEST_CASE("unknown labels raise UnknownCodeError carrying the text") {
    const Codebook cb = load_codebook(shipped_codebook());
    try {
        cb.resolve_code("XYZ", CodeNamespace::behaviour);
        FAIL("expected UnknownCodeError");
    } catch (const UnknownCodeError& e) {
        CHECK(e.label() == "XYZ");
    }
    // The eighth conflict label some outputs mention is not in the codebook.
    CHECK_THROWS_AS(cb.resolve_code("Emotional Conflict", CodeNamespace::conflict),
                    UnknownCodeError);
}

TEST_CASE("valence_of matches the shipped classes") {
    const Codebook cb = load_codebook(shipped_codebook());
    CHECK(cb.valence_of("behaviour.GI") == Valence::positive);
    CHECK(cb.valence_of("behaviour.MON") == Valence::neutral);
    CHECK(cb.valence_of("behaviour.CB") == Valence::negative);
    CHECK_THROWS_AS(cb.valence_of("conflict.EC"), DomainError);
}

TEST_CASE("codebook round-trips through its file format") {
    test_util::TempDir tmp("codebook");
    const Codebook cb = load_codebook(shipped_codebook());
    const auto copy_path = tmp.path() / "copy.json";
    store_codebook(cb, copy_path);
    const Codebook copy = load_codebook(copy_path);

    REQUIRE(copy.behaviours().size() == cb.behaviours().size());
    for (std::size_t i = 0; i < cb.behaviours().size(); ++i) {
        CHECK(copy.behaviours()[i].key == cb.behaviours()[i].key);
        CHECK(copy.behaviours()[i].definition == cb.behaviours()[i].definition);
        CHECK(copy.behaviours()[i].guideline == cb.behaviours()[i].guideline);
        CHECK(copy.behaviours()[i].examples == cb.behaviours()[i].examples);
        CHECK(copy.behaviours()[i].valence == cb.behaviours()[i].valence);
    }
    REQUIRE(copy.conflicts().size() == cb.conflicts().size());
    for (std::size_t i = 0; i < cb.conflicts().size(); ++i) {
        CHECK(copy.conflicts()[i].key == cb.conflicts()[i].key);
        CHECK(copy.conflicts()[i].definition == cb.conflicts()[i].definition);
    }
    CHECK(copy.version() == cb.version());
}

namespace {

nlohmann::json shipped_json() {
    std::ifstream in(shipped_codebook());
    return nlohmann::json::parse(in);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump(2);
}

}  // namespace

TEST_CASE("wrong cardinality is rejected with a count in the message") {
    test_util::TempDir tmp("codebook");
    nlohmann::json j = shipped_json();
    j["behaviours"].erase(17);
    const auto path = tmp.path() / "seventeen.json";
    write_json(path, j);
    try {
        load_codebook(path);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()) == "expected 18 behaviour codes, found 17");
    }
}

TEST_CASE("duplicate abbrev is rejected naming the duplicate") {
    test_util::TempDir tmp("codebook");
    nlohmann::json j = shipped_json();
    j["behaviours"][0]["abbrev"] = "LP";  // collides with the real LP
    const auto path = tmp.path() / "duplicate.json";
    write_json(path, j);
    try {
        load_codebook(path);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("LP") != std::string::npos);
    }
}

TEST_CASE("intensity parsing is case-insensitive and rejects off-scale values") {
    CHECK(parse_intensity("high") == Intensity::High);
    CHECK(parse_intensity(" MEDIUM ") == Intensity::Medium);
    CHECK(parse_intensity("Low") == Intensity::Low);
    CHECK_THROWS_AS(parse_intensity("Extreme"), DomainError);
}
