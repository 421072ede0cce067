#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <map>
#include <thread>

#include <httplib.h>

#include "generators.hpp"
#include "pedaco/gateway.hpp"

using namespace pedaco::gateway;
using pedaco::blueprint::ScriptBlueprint;

namespace {

const std::string kGood = "<Scene 1>\nVisual Description: A cell.\nClear Narration: This is a cell.\n";

ScriptBlueprint n_scenes(int n) {
    ScriptBlueprint bp;
    for (int i = 1; i <= n; ++i) {
        bp.scenes.push_back({i, "visual " + std::to_string(i), "narration " + std::to_string(i)});
    }
    return bp;
}

// Listens on a loopback port but never accepts, so connections complete in
// the kernel backlog and then sit silent.
struct SilentListener {
    int fd = -1;
    int port = 0;

    SilentListener() {
        fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
        REQUIRE(::listen(fd, 8) == 0);
        socklen_t len = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        port = ntohs(addr.sin_port);
    }
    ~SilentListener() { ::close(fd); }
};

struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

} // namespace

TEST_SUITE("gateway") {

TEST_CASE("prompt_hash is 64-bit FNV-1a") {
    CHECK(prompt_hash("") == "cbf29ce484222325");
    CHECK(prompt_hash("a") == "af63dc4c8601ec8c");
    CHECK(prompt_hash("foobar") == "85944171f73967e8");
}

TEST_CASE("strict mock answers by hash and rejects unknown prompts") {
    MockTextGenerator mock;
    mock.add_response("hello", "world");
    CHECK(mock.generate({"hello", {}}) == "world");
    try {
        mock.generate({"other", {}});
        FAIL("no error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::backend_error);
        CHECK(e.code() == "gateway_error");
    }
    CHECK(mock.calls() == 2);
}

TEST_CASE("mock fixtures load from a JSON file") {
    testgen::TempDir dir;
    testgen::write_text(dir.path / "f.json", R"({")" + prompt_hash("p") + R"(": "r"})");
    const auto fixtures = MockTextGenerator::load_fixtures(dir.path / "f.json");
    MockTextGenerator mock(fixtures);
    CHECK(mock.generate({"p", {}}) == "r");
}

TEST_CASE("generate_script parses a good response on the first attempt") {
    SequenceTextGenerator gen({{kGood, {}}});
    const auto out = generate_script(gen, pedaco::prompt::default_generation_config(), "Cells.");
    CHECK(out.attempts == 1);
    CHECK(out.blueprint.scenes.size() == 1);
    CHECK(out.transcripts == std::vector<std::string>{kGood});
}

TEST_CASE("a malformed response is retried once with a format reminder") {
    SequenceTextGenerator gen({{"sorry, no script", {}}, {kGood, {}}});
    const auto out = generate_script(gen, pedaco::prompt::default_generation_config(), "Cells.");
    CHECK(out.attempts == 2);
    REQUIRE(gen.prompts().size() == 2);
    CHECK(gen.prompts()[0].find(kFormatReminderHeader) == std::string::npos);
    CHECK(gen.prompts()[1].find(kFormatReminderHeader) != std::string::npos);
    CHECK(gen.prompts()[1].rfind(gen.prompts()[0], 0) == 0);
}

TEST_CASE("two malformed responses give malformed_output with both transcripts") {
    SequenceTextGenerator gen({{"nope", {}}, {"still nope", {}}, {kGood, {}}});
    try {
        generate_script(gen, pedaco::prompt::default_generation_config(), "Cells.");
        FAIL("no error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::malformed_output);
        CHECK(e.attempt() == 2);
        CHECK(e.transcripts() == std::vector<std::string>{"nope", "still nope"});
        CHECK(e.detail()["kind"] == "malformed_output");
        CHECK(e.detail()["transcripts"].size() == 2);
    }
    CHECK(gen.calls() == 2);
}

TEST_CASE("transport failures are retried and then surfaced with their kind") {
    SequenceTextGenerator ok_second({{"", GatewayErrorKind::rate_limited}, {kGood, {}}});
    CHECK(generate_script(ok_second, pedaco::prompt::default_generation_config(), "x").attempts == 2);

    SequenceTextGenerator both({{"", GatewayErrorKind::timeout}, {"", GatewayErrorKind::timeout}});
    try {
        generate_script(both, pedaco::prompt::default_generation_config(), "x");
        FAIL("no error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::timeout);
        CHECK(e.attempt() == 2);
    }

    SequenceTextGenerator no_retry(std::vector<SequenceTextGenerator::Step>{{"bad", std::nullopt}});
    CHECK_THROWS_AS(generate_script(no_retry, pedaco::prompt::default_generation_config(), "x", RetryPolicy{0}),
                    GatewayError);
    CHECK(no_retry.calls() == 1);
}

TEST_CASE("request_review parses the synthetic reviewer") {
    MockTextGenerator mock({}, synthetic_response);
    const auto bp = generate_script(mock, pedaco::prompt::default_generation_config(),
                                    "Plants need light. They make sugar. Oxygen is released.")
                        .blueprint;
    CHECK(bp.scenes.size() == 3);
    const auto review = request_review(mock, pedaco::prompt::default_review_config(), "content", bp, std::nullopt, 2);
    CHECK(review.report.iteration == 2);
    CHECK_FALSE(review.report.suggestions.empty());
    CHECK_FALSE(review.report.revised_script.empty());
}

TEST_CASE("seven scenes render to 56 seconds in scene order") {
    MockVideoSynthesizer synth;
    const auto m = render_video(n_scenes(7), {}, synth, 3);
    REQUIRE(m.clips.size() == 7);
    CHECK(m.total_duration_s == doctest::Approx(56.0));
    for (int i = 0; i < 7; ++i) {
        CHECK(m.clips[static_cast<std::size_t>(i)].scene_index == i + 1);
        CHECK(m.clips[static_cast<std::size_t>(i)].clip_ref.rfind("mock://scene/" + std::to_string(i + 1) + "/", 0) ==
              0);
    }
    CHECK(synth.calls() == 7);
    CHECK(render_video(n_scenes(7), {}, synth, 1) == m);
    CHECK(render_video(n_scenes(2), {5.0}, synth).total_duration_s == doctest::Approx(10.0));
}

TEST_CASE("concat_manifest orders clips and rejects gaps and duplicates") {
    const auto m = concat_manifest({{3, "c", 8}, {1, "a", 8}, {2, "b", 4}});
    CHECK(m.clips[0].clip_ref == "a");
    CHECK(m.clips[2].clip_ref == "c");
    CHECK(m.total_duration_s == doctest::Approx(20.0));
    auto code = [](std::vector<Clip> clips) {
        try {
            concat_manifest(std::move(clips));
        } catch (const RenderError& e) {
            return e.kind();
        }
        return RenderErrc::render_failed;
    };
    CHECK(code({{1, "a", 8}, {3, "c", 8}}) == RenderErrc::index_gap);
    CHECK(code({{1, "a", 8}, {1, "b", 8}}) == RenderErrc::duplicate_clip);
    CHECK(code({}) == RenderErrc::empty_blueprint);
    CHECK(code({{1, "a", 0}}) == RenderErrc::invalid_settings);
}

TEST_CASE("partial failure keeps completed clips for a retry") {
    MockVideoSynthesizer flaky({2, 5});
    std::vector<Clip> completed;
    try {
        render_video(n_scenes(6), {}, flaky);
        FAIL("no error");
    } catch (const RenderError& e) {
        CHECK(e.kind() == RenderErrc::render_failed);
        CHECK(e.code() == "render_failed");
        CHECK(e.failed_scenes() == std::vector<int>{2, 5});
        CHECK(e.detail()["failed_scenes"] == nlohmann::json::array({2, 5}));
        completed = e.completed();
    }
    CHECK(completed.size() == 4);

    MockVideoSynthesizer healthy;
    const auto m = render_video(n_scenes(6), {}, healthy, 4, completed);
    CHECK(healthy.calls() == 2);
    CHECK(m.clips.size() == 6);
}

TEST_CASE("render preconditions") {
    MockVideoSynthesizer synth;
    CHECK_THROWS_AS(render_video({}, {}, synth), RenderError);
    CHECK_THROWS_AS(render_video(n_scenes(1), {0.0}, synth), RenderError);
    CHECK(synth.calls() == 0);
}

TEST_CASE("HTTP text generator against a local server") {
    LocalServer local;
    std::string seen_auth;
    local.server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        const auto body = nlohmann::json::parse(req.body);
        res.set_content(nlohmann::json{{"text", "echo:" + body["prompt"].get<std::string>()}}.dump(),
                        "application/json");
    });
    local.server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 429; });
    local.server.Post("/junk", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"nope\":1}", "application/json");
    });
    local.start();
    const std::string base = "http://127.0.0.1:" + std::to_string(local.port);

    HttpTextGenerator gen({base + "/gen", "k123", 5.0});
    CHECK(gen.generate({"hi", {}}) == "echo:hi");
    CHECK(seen_auth == "Bearer k123");

    auto kind = [](HttpEndpoint ep) {
        try {
            HttpTextGenerator(std::move(ep)).generate({"x", {}});
        } catch (const GatewayError& e) {
            return e.kind();
        }
        return GatewayErrorKind::backend_error;
    };
    CHECK(kind({base + "/busy", "", 5.0}) == GatewayErrorKind::rate_limited);
    CHECK(kind({base + "/junk", "", 5.0}) == GatewayErrorKind::malformed_output);
    CHECK_THROWS_AS(HttpTextGenerator({"not a url", "", 1.0}).generate({"x", {}}), GatewayError);
}

TEST_CASE("a silent backend times out within the configured bound") {
    SilentListener silent;
    HttpTextGenerator gen({"http://127.0.0.1:" + std::to_string(silent.port) + "/gen", "", 0.3});
    const auto start = std::chrono::steady_clock::now();
    try {
        gen.generate({"x", {}});
        FAIL("no error");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::timeout);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < 5.0);
}

TEST_CASE("settings from the environment") {
    std::map<std::string, std::string> env = {{"TEXT_GEN_ENDPOINT", "http://t/x"},
                                              {"TEXT_GEN_API_KEY", "tk"},
                                              {"GATEWAY_TIMEOUT_S", "12.5"},
                                              {"GATEWAY_RETRIES", "3"},
                                              {"RENDER_PARALLELISM", "0"}};
    auto get = [&](const char* name) -> std::optional<std::string> {
        auto it = env.find(name);
        return it == env.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    const auto s = GatewaySettings::from_env(get);
    REQUIRE(s.text);
    CHECK(s.text->url == "http://t/x");
    CHECK(s.text->api_key == "tk");
    CHECK(s.text->timeout_s == 12.5);
    CHECK_FALSE(s.video);
    CHECK(s.retries == 3);
    CHECK(s.render_parallelism == 1);
    env["GATEWAY_TIMEOUT_S"] = "soon";
    CHECK_THROWS(GatewaySettings::from_env(get));
}

} // TEST_SUITE
