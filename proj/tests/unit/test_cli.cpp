#include <doctest.h>

#include <sstream>

#include "generators.hpp"
#include "pedaco/cli.hpp"

using namespace pedaco::cli;

namespace {

const std::string kContent = "Plants need light. Leaves hold chlorophyll. Water rises from roots. "
                             "Carbon dioxide enters leaves. Light splits water. Sugar is assembled. "
                             "Oxygen is released.";

CliEnv fixed_env() {
    CliEnv env;
    env.clock = [] { return pedaco::workflow::Timestamp{std::chrono::seconds{1700000000}}; };
    env.ids = [] { return std::string("p-cli"); };
    env.getenv = [](const char*) -> std::optional<std::string> { return std::nullopt; };
    return env;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

struct Cli {
    testgen::TempDir dir;
    CliEnv env = fixed_env();

    Run operator()(std::vector<std::string> args) {
        args.insert(args.begin(), {"--project-dir", (dir.path / "store").string()});
        std::ostringstream out, err;
        const int code = run_cli(args, out, err, env);
        return {code, out.str(), err.str()};
    }

    std::string file(const std::string& name, const std::string& text) {
        testgen::write_text(dir.path / name, text);
        return (dir.path / name).string();
    }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("new then generate yields a drafted project with one revision") {
    Cli cli;
    auto r = cli({"new", "--content", cli.file("c.txt", kContent)});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("project  p-cli") != std::string::npos);
    CHECK(r.out.find("state    setup") != std::string::npos);

    r = cli({"generate"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("state    drafted") != std::string::npos);
    CHECK(r.out.find("revision 1") != std::string::npos);
    CHECK(r.out.find("phase    2 (drafted)") != std::string::npos);
}

TEST_CASE("full pipeline to a 56 second render") {
    Cli cli;
    REQUIRE(cli({"new", "--content", cli.file("c.txt", kContent)}).code == 0);
    REQUIRE(cli({"generate"}).code == 0);
    REQUIRE(cli({"review", "--extra", "Use grade 8 vocabulary"}).code == 0);
    auto r = cli({"apply", "--pick", "1:narration", "--pick", "2:visual_description"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("revision 2") != std::string::npos);
    REQUIRE(cli({"finalize"}).code == 0);
    r = cli({"render"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("clips    7") != std::string::npos);
    CHECK(r.out.find("duration 56 s") != std::string::npos);
    CHECK(r.out.find("state    complete") != std::string::npos);

    r = cli({"status", "--script"});
    CHECK(r.code == 0);
    CHECK(r.out.find("<Scene 7>") != std::string::npos);
    CHECK(r.out.find("next     reopen") != std::string::npos);

    r = cli({"--json", "status"});
    CHECK(nlohmann::json::parse(r.out)["render"]["total_duration_s"] == 56.0);
    CHECK(cli({"list"}).out.find("p-cli  complete  rev 2") != std::string::npos);
}

TEST_CASE("render before finalize is a validation failure") {
    Cli cli;
    cli({"new", "--content", cli.file("c.txt", kContent)});
    const auto r = cli({"render"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("error: illegal_transition") != std::string::npos);
    CHECK(r.err.find("detail: ") != std::string::npos);
}

TEST_CASE("manual edits and stale revisions") {
    Cli cli;
    cli({"new", "--content", cli.file("c.txt", "One. Two.")});
    cli({"generate"});
    const std::string script =
        cli.file("s.txt", "<Scene 1>\nVisual Description: A.\nClear Narration: B.\n");
    CHECK(cli({"edit", "--script", script, "--base-revision", "1"}).code == 0);
    const auto r = cli({"edit", "--script", script, "--base-revision", "1"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("stale_revision") != std::string::npos);
    const auto bad = cli({"edit", "--script", cli.file("b.txt", "no scenes")});
    CHECK(bad.code == kExitValidation);
    CHECK(bad.err.find("missing_header") != std::string::npos);
}

TEST_CASE("backend failures exit with the gateway status") {
    Cli cli;
    testgen::write_text(cli.dir.path / "fixtures.json", "{}");
    cli({"new", "--content", cli.file("c.txt", kContent)});
    CHECK(exit_code_for("gateway_error") == kExitGateway);
    CHECK(exit_code_for("render_failed") == kExitGateway);
    CHECK(exit_code_for("not_found") == kExitValidation);
    // The configured live endpoint refuses connections.
    cli.env.getenv = [](const char* name) -> std::optional<std::string> {
        if (std::string(name) == "TEXT_GEN_ENDPOINT") return "http://127.0.0.1:9/gen";
        if (std::string(name) == "VIDEO_GEN_ENDPOINT") return "http://127.0.0.1:9/video";
        if (std::string(name) == "GATEWAY_TIMEOUT_S") return "0.5";
        if (std::string(name) == "GATEWAY_RETRIES") return "0";
        return std::nullopt;
    };
    const auto r = cli({"--live", "generate"});
    CHECK(r.code == kExitGateway);
    CHECK(r.err.find("gateway_error") != std::string::npos);
    CHECK(cli({"status"}).out.find("state    setup") != std::string::npos);
}

TEST_CASE("usage errors") {
    Cli cli;
    CHECK(cli({}).code == kExitValidation);
    CHECK(cli({"frobnicate"}).code == kExitValidation);
    CHECK(cli({"new"}).code == kExitValidation);
    CHECK(cli({"--mock", "--live", "list"}).code == kExitValidation);
    const auto r = cli({"generate"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("no project yet") != std::string::npos);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("eval improvement table from CSV") {
    Cli cli;
    const auto ratings = cli.file("ratings.csv", pedaco::eval::ratings_to_csv(testgen::table_ratings()));
    auto r = cli({"eval", "improvement", "--ratings", ratings});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, rule, first;
    std::getline(lines, header);
    std::getline(lines, rule);
    std::getline(lines, first);
    CHECK(header.find("Pedacogen") != std::string::npos);
    CHECK(first.find("Overall Validity") != std::string::npos);
    CHECK(first.find("+0.96") != std::string::npos);

    r = cli({"eval", "topics", "--ratings", ratings});
    CHECK(r.out.find("+1.17") != std::string::npos);

    const auto usability = cli.file("u.csv", pedaco::eval::usability_to_csv(testgen::gender_usability()));
    const auto demo = cli.file("d.csv", pedaco::eval::demographics_to_csv(testgen::gender_demographics()));
    r = cli({"eval", "subgroup", "--usability", usability, "--demographics", demo, "--partition", "gender"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Intent Reflection") != std::string::npos);

    r = cli({"--json", "eval", "descriptive", "--usability",
             cli.file("u2.csv", pedaco::eval::usability_to_csv(testgen::usability_scores()))});
    CHECK(nlohmann::json::parse(r.out)[0]["display"].get<std::string>().rfind("4.26", 0) == 0);

    r = cli({"eval", "improvement", "--ratings", cli.file("bad.csv", "participant_id,topic\n")});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("bad_header") != std::string::npos);
}

TEST_CASE("emit-prompts writes both prompt files") {
    Cli cli;
    const auto out = (cli.dir.path / "prompts").string();
    const auto r = cli({"fixtures", "emit-prompts", "--out", out});
    REQUIRE(r.code == 0);
    CHECK(testgen::read_text(cli.dir.path / "prompts" / "generation_default.txt") == default_generation_prompt_text());
    CHECK(testgen::read_text(cli.dir.path / "prompts" / "review_default.txt") == default_review_prompt_text());
}

TEST_CASE("CLI and API write identical project files") {
    Cli cli;
    const auto content = cli.file("c.txt", kContent);
    REQUIRE(cli({"new", "--content", content}).code == 0);
    REQUIRE(cli({"generate"}).code == 0);
    REQUIRE(cli({"review"}).code == 0);
    REQUIRE(cli({"apply", "--all"}).code == 0);

    testgen::TempDir api_dir;
    const auto env = fixed_env();
    pedaco::studio::StudioService svc(api_dir.path, pedaco::studio::mock_backends(), env.clock, env.ids);
    auto call = [&](const std::string& method, const std::string& path, const nlohmann::json& body) {
        pedaco::studio::ApiRequest req{method, path, {}, body.dump(), "application/json"};
        const auto res = pedaco::studio::route(svc, req);
        REQUIRE(res.status < 300);
    };
    call("POST", "/projects", {{"content", kContent}});
    call("POST", "/projects/p-cli/generate", nlohmann::json::object());
    call("POST", "/projects/p-cli/review", nlohmann::json::object());
    call("POST", "/projects/p-cli/apply", {{"mode", "all"}});

    const auto a = testgen::read_text(cli.dir.path / "store" / "p-cli" / "project.json");
    const auto b = testgen::read_text(api_dir.path / "p-cli" / "project.json");
    CHECK_FALSE(a.empty());
    CHECK(a == b);
}

} // TEST_SUITE
