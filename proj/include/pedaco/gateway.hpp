#pragma once

// Text-generation and video-synthesis backends behind narrow interfaces,
// plus the orchestration that turns prompts into blueprints and blueprints
// into per-scene clips.

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/blueprint.hpp"
#include "pedaco/error.hpp"
#include "pedaco/prompt.hpp"
#include "pedaco/review.hpp"

namespace pedaco::gateway {

enum class GatewayErrorKind { timeout, rate_limited, backend_error, malformed_output };

std::string_view to_string(GatewayErrorKind kind);

class GatewayError : public Error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& detail, int attempt = 1,
                 std::vector<std::string> transcripts = {});

    GatewayErrorKind kind() const noexcept { return kind_; }
    int attempt() const noexcept { return attempt_; }
    // Raw backend responses collected before giving up.
    const std::vector<std::string>& transcripts() const noexcept { return transcripts_; }

private:
    GatewayErrorKind kind_;
    int attempt_;
    std::vector<std::string> transcripts_;
};

// --- text generation -------------------------------------------------------

struct TextGenParams {
    double temperature = 0.7;
    int max_output = 8192;
};

struct TextGenRequest {
    std::string prompt;
    TextGenParams params;
};

class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string generate(const TextGenRequest& request) = 0;
    // False when calls must be serialized by the caller.
    virtual bool concurrent_safe() const { return true; }
};

// 64-bit FNV-1a of the prompt bytes, as 16 lowercase hex digits.
std::string prompt_hash(std::string_view prompt);

// Table-driven mock keyed by prompt_hash. Without a fallback it is strict:
// unknown prompts raise backend_error.
class MockTextGenerator final : public TextGenerator {
public:
    using Fallback = std::function<std::string(const std::string& prompt)>;

    explicit MockTextGenerator(std::map<std::string, std::string> fixtures = {}, Fallback fallback = {});

    // Reads a JSON object mapping prompt hash to response text.
    static std::map<std::string, std::string> load_fixtures(const std::filesystem::path& path);

    void add_response(std::string_view prompt, std::string response);
    std::string generate(const TextGenRequest& request) override;
    int calls() const noexcept { return calls_.load(); }

private:
    std::map<std::string, std::string> fixtures_;
    Fallback fallback_;
    std::atomic<int> calls_{0};
};

// Replays a fixed script of responses (or failures), one per call.
class SequenceTextGenerator final : public TextGenerator {
public:
    struct Step {
        std::string text;
        std::optional<GatewayErrorKind> failure;
    };

    explicit SequenceTextGenerator(std::vector<Step> steps);
    std::string generate(const TextGenRequest& request) override;
    bool concurrent_safe() const override { return false; }

    int calls() const noexcept { return static_cast<int>(prompts_.size()); }
    const std::vector<std::string>& prompts() const noexcept { return prompts_; }

private:
    std::deque<Step> steps_;
    std::vector<std::string> prompts_;
};

// Deterministic stand-in for a language model: answers generation prompts
// with one scene per content sentence and review prompts with a small fixed
// critique. Anything else gets a line of prose.
std::string synthetic_response(std::string_view prompt);

struct HttpEndpoint {
    std::string url;
    std::string api_key;
    double timeout_s = 60.0;
};

// POSTs {"prompt", "temperature", "max_output"} and returns the "text"
// member of the JSON reply.
class HttpTextGenerator final : public TextGenerator {
public:
    explicit HttpTextGenerator(HttpEndpoint endpoint);
    std::string generate(const TextGenRequest& request) override;

private:
    HttpEndpoint endpoint_;
};

// --- video synthesis -------------------------------------------------------

inline constexpr double kDefaultSceneSeconds = 8.0;

struct VideoJob {
    int scene_index = 1;
    std::string visual_prompt;
    std::string narration;
    double duration_s = kDefaultSceneSeconds;
};

struct Clip {
    int scene_index = 1;
    std::string clip_ref;
    double duration_s = kDefaultSceneSeconds;

    bool operator==(const Clip&) const = default;
};

struct RenderSettings {
    double per_scene_duration_s = kDefaultSceneSeconds;

    bool operator==(const RenderSettings&) const = default;
};

struct RenderManifest {
    std::vector<Clip> clips;
    double total_duration_s = 0.0;
    RenderSettings settings;

    bool operator==(const RenderManifest&) const = default;
};

class VideoSynthesizer {
public:
    virtual ~VideoSynthesizer() = default;
    virtual Clip synthesize(const VideoJob& job) = 0;
    virtual bool concurrent_safe() const { return true; }
};

// clip_ref = "mock://scene/<n>/<hash of the job>". Scenes listed in
// `failing` raise backend_error.
class MockVideoSynthesizer final : public VideoSynthesizer {
public:
    explicit MockVideoSynthesizer(std::set<int> failing = {});
    Clip synthesize(const VideoJob& job) override;
    int calls() const noexcept { return calls_.load(); }

private:
    std::set<int> failing_;
    std::atomic<int> calls_{0};
};

// POSTs the job as JSON and expects {"clip_ref": "..."} back.
class HttpVideoSynthesizer final : public VideoSynthesizer {
public:
    explicit HttpVideoSynthesizer(HttpEndpoint endpoint);
    Clip synthesize(const VideoJob& job) override;

private:
    HttpEndpoint endpoint_;
};

// --- configuration ---------------------------------------------------------

struct GatewaySettings {
    std::optional<HttpEndpoint> text;
    std::optional<HttpEndpoint> video;
    double timeout_s = 60.0;
    int retries = 1;
    int render_parallelism = 4;

    // TEXT_GEN_ENDPOINT, TEXT_GEN_API_KEY, VIDEO_GEN_ENDPOINT,
    // VIDEO_GEN_API_KEY, GATEWAY_TIMEOUT_S, GATEWAY_RETRIES,
    // RENDER_PARALLELISM.
    static GatewaySettings from_env(const std::function<std::optional<std::string>(const char*)>& getenv);
    static GatewaySettings from_env();
};

// --- orchestration ---------------------------------------------------------

struct RetryPolicy {
    // Extra backend calls allowed per logical request.
    int retries = 1;
};

inline constexpr std::string_view kFormatReminderHeader = "[Format Reminder]";

struct ScriptOutcome {
    blueprint::ScriptBlueprint blueprint;
    int attempts = 1;
    std::vector<std::string> transcripts;
    std::vector<std::string> warnings;
};

// assemble -> generate -> parse; a response that does not parse is re-asked
// with a format reminder while the retry budget lasts.
ScriptOutcome generate_script(TextGenerator& generator, const prompt::PromptConfig& config, std::string_view content,
                              RetryPolicy policy = {}, TextGenParams params = {});

struct ReviewOutcome {
    review::ReviewReport report;
    int attempts = 1;
    std::vector<std::string> transcripts;
};

ReviewOutcome request_review(TextGenerator& generator, const prompt::PromptConfig& config, std::string_view content,
                             const blueprint::ScriptBlueprint& bp, std::optional<std::string_view> extra,
                             int iteration, RetryPolicy policy = {}, TextGenParams params = {});

enum class RenderErrc { empty_blueprint, render_failed, index_gap, duplicate_clip, invalid_settings };

std::string_view to_string(RenderErrc code);

class RenderError : public Error {
public:
    RenderError(RenderErrc kind, const std::string& message, std::vector<int> failed_scenes = {},
                std::vector<Clip> completed = {});

    RenderErrc kind() const noexcept { return kind_; }
    const std::vector<int>& failed_scenes() const noexcept { return failed_scenes_; }
    // Clips that did succeed; pass them back as `retained` on retry.
    const std::vector<Clip>& completed() const noexcept { return completed_; }

private:
    RenderErrc kind_;
    std::vector<int> failed_scenes_;
    std::vector<Clip> completed_;
};

std::vector<VideoJob> plan_jobs(const blueprint::ScriptBlueprint& bp, const RenderSettings& settings);

// Orders clips by scene and checks they cover 1..N exactly once.
RenderManifest concat_manifest(std::vector<Clip> clips, RenderSettings settings = {});

// One job per scene, fanned out over up to `parallelism` workers and joined
// by scene index. Clips in `retained` with matching scene and duration are
// reused instead of resubmitted.
RenderManifest render_video(const blueprint::ScriptBlueprint& bp, const RenderSettings& settings,
                            VideoSynthesizer& synthesizer, int parallelism = 4,
                            std::span<const Clip> retained = {});

} // namespace pedaco::gateway
