#include <doctest.h>

#include "generators.hpp"
#include "pedaco/blueprint.hpp"

using namespace pedaco::blueprint;

namespace {

BlueprintErrc parse_error(const std::string& text) {
    try {
        parse_blueprint(text);
    } catch (const BlueprintError& e) {
        return e.kind();
    }
    FAIL("expected a parse error for: " << text);
    return BlueprintErrc::invariant_violation;
}

ScriptBlueprint two_scenes() {
    ScriptBlueprint bp;
    bp.scenes = {{1, "Two spiral galaxies.", "Let's watch two galaxies meet."},
                 {2, "Tidal tails stretch out.", "Gravity pulls stars into long arcs."}};
    return bp;
}

} // namespace

TEST_SUITE("blueprint") {

TEST_CASE("single scene parses with fields as given") {
    const auto bp = parse_blueprint(
        "<Scene 1>\nVisual Description: A spiral galaxy drifting.\nClear Narration: Let's watch two galaxies meet.");
    REQUIRE(bp.scenes.size() == 1);
    CHECK(bp.scenes[0].index == 1);
    CHECK(bp.scenes[0].visual_description == "A spiral galaxy drifting.");
    CHECK(bp.scenes[0].narration == "Let's watch two galaxies meet.");
}

TEST_CASE("missing narration label is MissingField") {
    CHECK(parse_error("<Scene 1>\nVisual Description: X.") == BlueprintErrc::missing_field);
}

TEST_CASE("declared error variants") {
    CHECK(parse_error("") == BlueprintErrc::missing_header);
    CHECK(parse_error("just prose, no scenes") == BlueprintErrc::missing_header);
    CHECK(parse_error("Visual Description: a\nClear Narration: b") == BlueprintErrc::missing_header);
    CHECK(parse_error("<Scene 1>\nVisual Description: a\nClear Narration: b\n<Scene 1>\nVisual Description: "
                      "c\nClear Narration: d") == BlueprintErrc::duplicate_index);
    CHECK(parse_error("<Scene 1>\nVisual Description:   \nClear Narration: b") == BlueprintErrc::empty_field);
    CHECK(parse_error("<Scene one>\nVisual Description: a\nClear Narration: b") == BlueprintErrc::header_not_integer);
    CHECK(parse_error("<Scene 0>\nVisual Description: a\nClear Narration: b") == BlueprintErrc::header_not_integer);
    CHECK(parse_error("<Scene 1>\nloose text\nVisual Description: a\nClear Narration: b") ==
          BlueprintErrc::missing_field);
}

TEST_CASE("errors carry the offending line") {
    try {
        parse_blueprint("<Scene 1>\nVisual Description: a\nClear Narration: b\n\n<Scene x>\n");
        FAIL("no error");
    } catch (const BlueprintError& e) {
        CHECK(e.line() == 5);
        CHECK(e.code() == "header_not_integer");
        CHECK(e.detail()["line"] == 5);
    }
}

TEST_CASE("tolerant header, label case and markdown residue") {
    const std::string messy = "Here is your script:\n```\n**< Scene 1 >**\n**visual description:** A galaxy.\n"
                              "CLEAR NARRATION: Look up.\n---\n## <scene 2>\n- Visual Description: Stars.\n"
                              "__Clear Narration:__ They collide.\n```\n";
    const auto outcome = parse_blueprint_detailed(messy);
    REQUIRE(outcome.blueprint.scenes.size() == 2);
    CHECK(outcome.blueprint.scenes[0].visual_description == "A galaxy.");
    CHECK(outcome.blueprint.scenes[0].narration == "Look up.");
    CHECK(outcome.blueprint.scenes[1].visual_description == "Stars.");
    CHECK(outcome.blueprint.scenes[1].narration == "They collide.");
    REQUIRE(outcome.warnings.size() == 1);
    CHECK(outcome.warnings[0].find("Here is your script") != std::string::npos);
}

TEST_CASE("gapped indices are renumbered with a warning") {
    const auto outcome = parse_blueprint_detailed("<Scene 2>\nVisual Description: a\nClear Narration: b\n"
                                                  "<Scene 5>\nVisual Description: c\nClear Narration: d\n"
                                                  "<Scene 9>\nVisual Description: e\nClear Narration: f\n");
    REQUIRE(outcome.blueprint.scenes.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(outcome.blueprint.scenes[static_cast<std::size_t>(i)].index == i + 1);
    REQUIRE(outcome.warnings.size() == 1);
    CHECK(outcome.warnings[0].find("{2,5,9}") != std::string::npos);
}

TEST_CASE("multi-line fields keep interior newlines") {
    const auto bp = parse_blueprint("<Scene 1>\nVisual Description: line one\n  line two\n\nline four  \n"
                                    "Clear Narration: said\nand more\n\n");
    CHECK(bp.scenes[0].visual_description == "line one\n  line two\n\nline four");
    CHECK(bp.scenes[0].narration == "said\nand more");
}

TEST_CASE("CRLF input parses like LF") {
    const auto bp = parse_blueprint("<Scene 1>\r\nVisual Description: a\r\nb\r\nClear Narration: c\r\n");
    CHECK(bp.scenes[0].visual_description == "a\nb");
    CHECK(bp.scenes[0].narration == "c");
}

TEST_CASE("serialize emits the canonical grammar") {
    const std::string text = serialize_blueprint(two_scenes());
    CHECK(text == "<Scene 1>\nVisual Description: Two spiral galaxies.\nClear Narration: Let's watch two galaxies "
                  "meet.\n\n<Scene 2>\nVisual Description: Tidal tails stretch out.\nClear Narration: Gravity pulls "
                  "stars into long arcs.\n");
    CHECK(text.find("<Scene 1>") < text.find("<Scene 2>"));
}

TEST_CASE("serialize rejects gapped indices") {
    ScriptBlueprint bp = two_scenes();
    bp.scenes[1].index = 3;
    CHECK_THROWS_AS(serialize_blueprint(bp), BlueprintError);
    try {
        serialize_blueprint(bp);
    } catch (const BlueprintError& e) {
        CHECK(e.kind() == BlueprintErrc::invariant_violation);
    }
}

TEST_CASE("serialize rejects fields that would not round-trip") {
    auto bad = [](std::string visual) {
        ScriptBlueprint bp;
        bp.scenes = {{1, std::move(visual), "n"}};
        CHECK_THROWS_AS(validate_blueprint(bp), BlueprintError);
    };
    bad("");
    bad(" padded");
    bad("a\n<Scene 2>");
    bad("a\nClear Narration: sneaky");
    bad("a\n---");
    bad("a\r\nb");
}

TEST_CASE("normalize_indices") {
    ScriptBlueprint bp = two_scenes();
    bp.scenes.push_back({9, "c", "d"});
    bp.scenes[0].index = 2;
    bp.scenes[1].index = 5;
    const auto n = normalize_indices(bp);
    CHECK(n.scenes[0].index == 1);
    CHECK(n.scenes[1].index == 2);
    CHECK(n.scenes[2].index == 3);
    CHECK(n.scenes[2].narration == "d");
    CHECK(normalize_indices(two_scenes()) == two_scenes());
    CHECK(normalize_indices(ScriptBlueprint{}).scenes.empty());
}

TEST_CASE("diff_blueprints") {
    const auto a = two_scenes();
    CHECK(diff_blueprints(a, a).empty());

    auto b = a;
    b.scenes[1].narration = "Changed.";
    auto d = diff_blueprints(a, b);
    REQUIRE(d.size() == 1);
    CHECK(d[0].scene_index == 2);
    CHECK(d[0].kind == DiffKind::modified);
    CHECK(d[0].changed_fields == std::vector<Field>{Field::narration});

    b = a;
    b.scenes.push_back({3, "x", "y"});
    b.scenes.push_back({4, "z", "w"});
    d = diff_blueprints(a, b);
    REQUIRE(d.size() == 2);
    CHECK(d[1].scene_index == 4);
    CHECK(d[1].kind == DiffKind::added);
    CHECK_FALSE(d[1].before.has_value());

    d = diff_blueprints(b, a);
    CHECK(d.back().kind == DiffKind::removed);
    CHECK_FALSE(d.back().after.has_value());
}

TEST_CASE("round-trip property over random blueprints") {
    testgen::Rng rng(11);
    for (int i = 0; i < 300; ++i) {
        const auto bp = testgen::random_blueprint(rng);
        const std::string text = serialize_blueprint(bp);
        CHECK(text == testgen::write_canonical(bp));
        const auto back = parse_blueprint(text);
        REQUIRE(back == bp);
        CHECK(normalize_script_text(text) == text);
    }
}

TEST_CASE("each mutation yields its declared error") {
    testgen::Rng rng(12);
    for (int i = 0; i < 120; ++i) {
        const auto bp = testgen::random_blueprint(rng, 6);
        const auto m = testgen::mutate(bp, testgen::kMutations[i % 6], rng);
        CAPTURE(m.text);
        CHECK(parse_error(m.text) == m.expected);
    }
}

TEST_CASE("no silent loss: every non-space character survives parse") {
    testgen::Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const auto bp = testgen::random_blueprint(rng, 5);
        const std::string text = serialize_blueprint(bp);
        const std::string again = serialize_blueprint(parse_blueprint(text));
        auto visible = [](const std::string& s) {
            std::string out;
            for (char c : s) {
                if (c != ' ' && c != '\n' && c != '\t') out += c;
            }
            return out;
        };
        CHECK(visible(again) == visible(text));
    }
}

} // TEST_SUITE
