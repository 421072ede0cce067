#include <httplib.h>

#include "pedaco/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "text_util.hpp"

namespace pedaco::gateway {

using nlohmann::json;

namespace {

std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

struct UrlParts {
    std::string origin;
    std::string path;
};

UrlParts split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw GatewayError(GatewayErrorKind::backend_error, "endpoint '" + url + "' is not an absolute URL");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const HttpEndpoint& endpoint, const json& body) {
    const auto [origin, path] = split_url(endpoint.url);
    httplib::Client client(origin);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(std::max(0.001, endpoint.timeout_s)));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result) {
        const auto err = result.error();
        const std::string what = httplib::to_string(err);
        switch (err) {
        case httplib::Error::Connection:
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write:
            throw GatewayError(GatewayErrorKind::timeout,
                               endpoint.url + " did not answer within " + format_seconds(endpoint.timeout_s) +
                                   " s (" + what + ")");
        default:
            throw GatewayError(GatewayErrorKind::backend_error, endpoint.url + ": " + what);
        }
    }
    if (result->status == 429) {
        throw GatewayError(GatewayErrorKind::rate_limited, endpoint.url + " returned 429");
    }
    if (result->status < 200 || result->status >= 300) {
        throw GatewayError(GatewayErrorKind::backend_error,
                           endpoint.url + " returned HTTP " + std::to_string(result->status));
    }
    try {
        return json::parse(result->body);
    } catch (const json::exception&) {
        throw GatewayError(GatewayErrorKind::malformed_output, endpoint.url + " returned a non-JSON body", 1,
                           {result->body});
    }
}

std::vector<std::string> split_sentences(std::string_view content) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        auto t = text::trim(current);
        if (!t.empty()) out.emplace_back(t);
        current.clear();
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (c == '\n') {
            flush();
            continue;
        }
        current += c;
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == content.size() || text::is_space(content[i + 1]))) {
            flush();
        }
    }
    flush();
    return out;
}

std::string section_after(std::string_view prompt, std::string_view header) {
    const std::string marker = "\n" + std::string(header) + "\n\n";
    const auto at = prompt.rfind(marker);
    if (at == std::string_view::npos) return {};
    return std::string(prompt.substr(at + marker.size()));
}

std::optional<int> requested_max_scenes(std::string_view prompt) {
    const auto at = prompt.find(prompt::kMaxSceneCountPrefix);
    if (at == std::string_view::npos) return std::nullopt;
    std::size_t i = at + prompt::kMaxSceneCountPrefix.size();
    while (i < prompt.size() && prompt[i] == ' ') ++i;
    std::size_t start = i;
    while (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) ++i;
    if (i == start || i - start > 4) return std::nullopt;
    return std::stoi(std::string(prompt.substr(start, i - start)));
}

std::string synthetic_script(std::string_view prompt) {
    std::string content = section_after(prompt, prompt::kLearningContentHeader);
    auto sentences = split_sentences(content);
    if (sentences.empty()) return "There is no learning content to turn into a script.";

    if (auto cap = requested_max_scenes(prompt); cap && *cap > 0 &&
                                                 static_cast<int>(sentences.size()) > *cap) {
        std::vector<std::string> merged(static_cast<std::size_t>(*cap));
        const std::size_t per = (sentences.size() + *cap - 1) / *cap;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            auto& slot = merged[std::min(i / per, merged.size() - 1)];
            slot += slot.empty() ? "" : " ";
            slot += sentences[i];
        }
        merged.erase(std::remove(merged.begin(), merged.end(), std::string()), merged.end());
        sentences = std::move(merged);
    }

    blueprint::ScriptBlueprint bp;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        std::string topic = sentences[i];
        while (!topic.empty() && (topic.back() == '.' || topic.back() == '!' || topic.back() == '?')) topic.pop_back();
        bp.scenes.push_back({static_cast<int>(i) + 1,
                             "Animated diagram: " + topic + ". Arrows and highlight colors point to the key terms.",
                             sentences[i]});
    }
    return blueprint::serialize_blueprint(bp);
}

std::string synthetic_review(std::string_view prompt) {
    blueprint::ScriptBlueprint current;
    try {
        current = blueprint::parse_blueprint(section_after(prompt, prompt::kScriptHeader));
    } catch (const blueprint::BlueprintError&) {
        return "The script could not be read, so no review is possible.";
    }
    const int last = static_cast<int>(current.scenes.size());
    constexpr std::string_view kCallout = " Key terms appear as labeled callouts.";
    constexpr std::string_view kCue = " A highlight color marks the main idea.";

    review::ReviewReport report;
    report.detailed_results = "The script has " + std::to_string(last) +
                              " scenes and follows the learning content. Scene 1 can introduce the key terms more "
                              "explicitly, and the closing scene can signal the main idea more clearly.";
    report.suggestions.push_back({1, {1}, "Scene 1: introduce the key terms before the main explanation."});
    report.suggestions.push_back(
        {2, {last}, "Scene " + std::to_string(last) + ": highlight the main idea with a color cue."});
    report.revised_script = current;
    auto append_once = [](std::string& field, std::string_view addition) {
        if (field.find(text::trim(addition)) == std::string::npos) field += addition;
    };
    append_once(report.revised_script.scenes.front().visual_description, kCallout);
    append_once(report.revised_script.scenes.back().visual_description, kCue);
    return review::render_review(report);
}

std::string reminder(std::string_view problem) {
    return "\n\n" + std::string(kFormatReminderHeader) + "\nThe previous response could not be used (" +
           std::string(problem) + "). Reply again using exactly the " + std::string(prompt::kOutputFormatHeader) +
           " above.\n";
}

template <typename Parse>
auto ask_with_retries(TextGenerator& generator, const std::string& base_prompt, RetryPolicy policy,
                      TextGenParams params, std::vector<std::string>& transcripts, int& attempts, Parse parse)
    -> decltype(parse(std::string())) {
    const int budget = 1 + std::max(0, policy.retries);
    std::string prompt = base_prompt;
    std::optional<GatewayError> transport;
    std::string parse_problem;

    for (int attempt = 1; attempt <= budget; ++attempt) {
        attempts = attempt;
        std::string response;
        try {
            response = generator.generate(TextGenRequest{prompt, params});
        } catch (const GatewayError& e) {
            transport.emplace(e.kind(), e.what(), attempt);
            parse_problem.clear();
            continue;
        }
        transcripts.push_back(response);
        try {
            return parse(response);
        } catch (const Error& e) {
            parse_problem = e.what();
            transport.reset();
            prompt = base_prompt + reminder(parse_problem);
        }
    }
    if (!parse_problem.empty()) {
        throw GatewayError(GatewayErrorKind::malformed_output,
                           "no usable response after " + std::to_string(attempts) + " attempts: " + parse_problem,
                           attempts, transcripts);
    }
    throw GatewayError(transport->kind(), transport->what(), attempts, transcripts);
}

} // namespace

std::string_view to_string(GatewayErrorKind kind) {
    switch (kind) {
    case GatewayErrorKind::timeout: return "timeout";
    case GatewayErrorKind::rate_limited: return "rate_limited";
    case GatewayErrorKind::backend_error: return "backend_error";
    case GatewayErrorKind::malformed_output: return "malformed_output";
    }
    return "backend_error";
}

GatewayError::GatewayError(GatewayErrorKind kind, const std::string& detail, int attempt,
                           std::vector<std::string> transcripts)
    : Error("gateway_error", detail,
            json{{"kind", std::string(to_string(kind))}, {"attempt", std::max(1, attempt)}, {"transcripts", transcripts}}),
      kind_(kind),
      attempt_(std::max(1, attempt)),
      transcripts_(std::move(transcripts)) {}

std::string prompt_hash(std::string_view prompt) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : prompt) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MockTextGenerator::MockTextGenerator(std::map<std::string, std::string> fixtures, Fallback fallback)
    : fixtures_(std::move(fixtures)), fallback_(std::move(fallback)) {}

std::map<std::string, std::string> MockTextGenerator::load_fixtures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("invalid_config", "cannot open mock fixture file " + path.string());
    std::map<std::string, std::string> fixtures;
    try {
        const json doc = json::parse(in);
        for (const auto& [hash, response] : doc.items()) fixtures.emplace(hash, response.get<std::string>());
    } catch (const json::exception& e) {
        throw Error("invalid_config", "mock fixture file " + path.string() + ": " + e.what());
    }
    return fixtures;
}

void MockTextGenerator::add_response(std::string_view prompt, std::string response) {
    fixtures_[prompt_hash(prompt)] = std::move(response);
}

std::string MockTextGenerator::generate(const TextGenRequest& request) {
    ++calls_;
    const std::string hash = prompt_hash(request.prompt);
    if (auto it = fixtures_.find(hash); it != fixtures_.end()) return it->second;
    if (fallback_) return fallback_(request.prompt);
    throw GatewayError(GatewayErrorKind::backend_error, "mock has no fixture for prompt hash " + hash);
}

SequenceTextGenerator::SequenceTextGenerator(std::vector<Step> steps) : steps_(steps.begin(), steps.end()) {}

std::string SequenceTextGenerator::generate(const TextGenRequest& request) {
    prompts_.push_back(request.prompt);
    if (steps_.empty()) {
        throw GatewayError(GatewayErrorKind::backend_error, "scripted generator has no responses left");
    }
    Step step = std::move(steps_.front());
    steps_.pop_front();
    if (step.failure) throw GatewayError(*step.failure, "scripted failure");
    return step.text;
}

std::string synthetic_response(std::string_view prompt) {
    if (prompt.find("\n" + std::string(prompt::kScriptHeader) + "\n\n") != std::string_view::npos) {
        return synthetic_review(prompt);
    }
    if (prompt.find("\n" + std::string(prompt::kLearningContentHeader) + "\n\n") != std::string_view::npos) {
        return synthetic_script(prompt);
    }
    return "I can help you plan an educational video. Please share the learning content.";
}

HttpTextGenerator::HttpTextGenerator(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpTextGenerator::generate(const TextGenRequest& request) {
    const json reply = post_json(endpoint_, {{"prompt", request.prompt},
                                             {"temperature", request.params.temperature},
                                             {"max_output", request.params.max_output}});
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw GatewayError(GatewayErrorKind::malformed_output, endpoint_.url + " reply has no \"text\" string", 1,
                           {reply.dump()});
    }
    return reply["text"].get<std::string>();
}

MockVideoSynthesizer::MockVideoSynthesizer(std::set<int> failing) : failing_(std::move(failing)) {}

Clip MockVideoSynthesizer::synthesize(const VideoJob& job) {
    ++calls_;
    if (failing_.count(job.scene_index)) {
        throw GatewayError(GatewayErrorKind::backend_error,
                           "mock synthesis failure for scene " + std::to_string(job.scene_index));
    }
    const std::string hash =
        prompt_hash(job.visual_prompt + '\x1f' + job.narration + '\x1f' + format_seconds(job.duration_s));
    return {job.scene_index, "mock://scene/" + std::to_string(job.scene_index) + "/" + hash, job.duration_s};
}

HttpVideoSynthesizer::HttpVideoSynthesizer(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

Clip HttpVideoSynthesizer::synthesize(const VideoJob& job) {
    const json reply = post_json(endpoint_, {{"scene_index", job.scene_index},
                                             {"visual_prompt", job.visual_prompt},
                                             {"narration", job.narration},
                                             {"duration_s", job.duration_s}});
    if (!reply.is_object() || !reply.contains("clip_ref") || !reply["clip_ref"].is_string()) {
        throw GatewayError(GatewayErrorKind::malformed_output, endpoint_.url + " reply has no \"clip_ref\" string", 1,
                           {reply.dump()});
    }
    return {job.scene_index, reply["clip_ref"].get<std::string>(), job.duration_s};
}

GatewaySettings GatewaySettings::from_env(const std::function<std::optional<std::string>(const char*)>& getenv) {
    GatewaySettings s;
    auto number = [&](const char* name, double fallback) {
        auto raw = getenv(name);
        if (!raw || raw->empty()) return fallback;
        try {
            std::size_t used = 0;
            double v = std::stod(*raw, &used);
            if (used != raw->size() || !std::isfinite(v) || v < 0) throw std::invalid_argument(name);
            return v;
        } catch (const std::exception&) {
            throw Error("invalid_config", std::string(name) + " must be a non-negative number, got '" + *raw + "'");
        }
    };
    s.timeout_s = number("GATEWAY_TIMEOUT_S", s.timeout_s);
    s.retries = static_cast<int>(number("GATEWAY_RETRIES", s.retries));
    s.render_parallelism = std::max(1, static_cast<int>(number("RENDER_PARALLELISM", s.render_parallelism)));
    if (auto url = getenv("TEXT_GEN_ENDPOINT"); url && !url->empty()) {
        s.text = HttpEndpoint{*url, getenv("TEXT_GEN_API_KEY").value_or(""), s.timeout_s};
    }
    if (auto url = getenv("VIDEO_GEN_ENDPOINT"); url && !url->empty()) {
        s.video = HttpEndpoint{*url, getenv("VIDEO_GEN_API_KEY").value_or(""), s.timeout_s};
    }
    return s;
}

GatewaySettings GatewaySettings::from_env() {
    return from_env([](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        return v ? std::optional<std::string>(v) : std::nullopt;
    });
}

ScriptOutcome generate_script(TextGenerator& generator, const prompt::PromptConfig& config, std::string_view content,
                              RetryPolicy policy, TextGenParams params) {
    const std::string base = prompt::assemble_generation_prompt(config, content);
    ScriptOutcome outcome;
    auto parsed = ask_with_retries(generator, base, policy, params, outcome.transcripts, outcome.attempts,
                                   [](const std::string& r) { return blueprint::parse_blueprint_detailed(r); });
    outcome.blueprint = std::move(parsed.blueprint);
    outcome.warnings = std::move(parsed.warnings);
    return outcome;
}

ReviewOutcome request_review(TextGenerator& generator, const prompt::PromptConfig& config, std::string_view content,
                             const blueprint::ScriptBlueprint& bp, std::optional<std::string_view> extra,
                             int iteration, RetryPolicy policy, TextGenParams params) {
    const std::string base = prompt::assemble_review_prompt(config, content, bp, extra);
    ReviewOutcome outcome;
    outcome.report = ask_with_retries(generator, base, policy, params, outcome.transcripts, outcome.attempts,
                                      [](const std::string& r) { return review::parse_review(r); });
    outcome.report.iteration = iteration;
    review::anchor_suggestions(outcome.report, bp);
    return outcome;
}

std::string_view to_string(RenderErrc code) {
    switch (code) {
    case RenderErrc::empty_blueprint: return "empty_blueprint";
    case RenderErrc::render_failed: return "render_failed";
    case RenderErrc::index_gap: return "index_gap";
    case RenderErrc::duplicate_clip: return "duplicate_clip";
    case RenderErrc::invalid_settings: return "invalid_settings";
    }
    return "render_failed";
}

RenderError::RenderError(RenderErrc kind, const std::string& message, std::vector<int> failed_scenes,
                         std::vector<Clip> completed)
    : Error(std::string(to_string(kind)), message, json{{"failed_scenes", failed_scenes}}),
      kind_(kind),
      failed_scenes_(std::move(failed_scenes)),
      completed_(std::move(completed)) {}

std::vector<VideoJob> plan_jobs(const blueprint::ScriptBlueprint& bp, const RenderSettings& settings) {
    std::vector<VideoJob> jobs;
    jobs.reserve(bp.scenes.size());
    for (const auto& scene : bp.scenes) {
        jobs.push_back({scene.index, scene.visual_description, scene.narration, settings.per_scene_duration_s});
    }
    return jobs;
}

RenderManifest concat_manifest(std::vector<Clip> clips, RenderSettings settings) {
    if (clips.empty()) throw RenderError(RenderErrc::empty_blueprint, "no clips to combine");
    std::stable_sort(clips.begin(), clips.end(),
                     [](const Clip& a, const Clip& b) { return a.scene_index < b.scene_index; });
    RenderManifest manifest;
    manifest.settings = settings;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const int expected = static_cast<int>(i) + 1;
        if (i > 0 && clips[i].scene_index == clips[i - 1].scene_index) {
            throw RenderError(RenderErrc::duplicate_clip,
                              "scene " + std::to_string(clips[i].scene_index) + " has more than one clip");
        }
        if (clips[i].scene_index != expected) {
            throw RenderError(RenderErrc::index_gap, "clip for scene " + std::to_string(expected) + " is missing");
        }
        if (!(clips[i].duration_s > 0) || !std::isfinite(clips[i].duration_s)) {
            throw RenderError(RenderErrc::invalid_settings,
                              "clip for scene " + std::to_string(expected) + " has a non-positive duration");
        }
        manifest.total_duration_s += clips[i].duration_s;
    }
    manifest.clips = std::move(clips);
    return manifest;
}

RenderManifest render_video(const blueprint::ScriptBlueprint& bp, const RenderSettings& settings,
                            VideoSynthesizer& synthesizer, int parallelism, std::span<const Clip> retained) {
    if (bp.empty()) throw RenderError(RenderErrc::empty_blueprint, "the script has no scenes to render");
    if (!(settings.per_scene_duration_s > 0) || !std::isfinite(settings.per_scene_duration_s)) {
        throw RenderError(RenderErrc::invalid_settings, "per-scene duration must be a positive number of seconds");
    }
    const auto jobs = plan_jobs(blueprint::normalize_indices(bp), settings);

    std::vector<std::optional<Clip>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto reuse = std::find_if(retained.begin(), retained.end(), [&](const Clip& c) {
            return c.scene_index == jobs[i].scene_index && c.duration_s == jobs[i].duration_s;
        });
        if (reuse != retained.end()) {
            results[i] = *reuse;
        } else {
            pending.push_back(i);
        }
    }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < pending.size();) {
            const std::size_t i = pending[k];
            try {
                Clip clip = synthesizer.synthesize(jobs[i]);
                clip.scene_index = jobs[i].scene_index;
                results[i] = std::move(clip);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int cap = synthesizer.concurrent_safe() ? std::max(1, parallelism) : 1;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cap), pending.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::vector<int> failed;
    std::vector<Clip> completed;
    std::string first_error;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) {
            completed.push_back(*results[i]);
        } else {
            failed.push_back(jobs[i].scene_index);
            if (first_error.empty()) first_error = errors[i];
        }
    }
    if (!failed.empty()) {
        std::string list;
        for (int f : failed) list += (list.empty() ? "" : ", ") + std::to_string(f);
        throw RenderError(RenderErrc::render_failed, "rendering failed for scene(s) " + list + ": " + first_error,
                          std::move(failed), std::move(completed));
    }
    return concat_manifest(std::move(completed), settings);
}

} // namespace pedaco::gateway
