#pragma once

// Application service behind both the HTTP API and the CLI. Every mutation
// runs under the project's writer lock, goes through the workflow
// transition table, and is persisted before it returns.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pedaco/eval/report.hpp"
#include "pedaco/gateway.hpp"
#include "pedaco/workflow.hpp"

namespace pedaco::studio {

using Clock = std::function<workflow::Timestamp()>;
using IdSource = std::function<std::string()>;

workflow::Timestamp system_clock_seconds();
// "p-" followed by 12 random hex digits.
std::string random_project_id();

struct StudioConfig {
    std::filesystem::path store_root = "projects";
    std::string host = "127.0.0.1";
    int port = 8080;
    // Allowed browser origin; empty disables CORS headers.
    std::string cors_origin;
    bool live = false;
    std::optional<std::filesystem::path> mock_fixtures;
    gateway::GatewaySettings gateways;

    // Keys: store_root, host, port, cors_origin, live, mock_fixtures,
    // text_endpoint, text_api_key, video_endpoint, video_api_key,
    // timeout_s, retries, render_parallelism. Unknown keys are rejected.
    // Relative paths resolve against `base_dir`.
    static StudioConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static StudioConfig from_file(const std::filesystem::path& path);
};

struct Backends {
    std::shared_ptr<gateway::TextGenerator> text;
    std::shared_ptr<gateway::VideoSynthesizer> video;
    gateway::RetryPolicy retry;
    int render_parallelism = 4;
    // Live backends answer generate/review/render with 202 and finish in
    // the background; mocks complete before returning.
    bool asynchronous = false;
};

// Fixture-table text mock falling back to synthetic_response, plus the
// mock video synthesizer.
Backends mock_backends(const std::optional<std::filesystem::path>& fixtures = std::nullopt);
// HTTP adapters from settings; throws Error("invalid_config") when an
// endpoint is missing.
Backends live_backends(const gateway::GatewaySettings& settings);
Backends backends_for(const StudioConfig& config);

// Result of a service call: HTTP status plus the `data` payload.
struct Reply {
    int status = 200;
    nlohmann::json data;
};

class StudioService {
public:
    StudioService(std::filesystem::path store_root, Backends backends, Clock clock = system_clock_seconds,
                  IdSource ids = random_project_id);
    ~StudioService();

    StudioService(const StudioService&) = delete;
    StudioService& operator=(const StudioService&) = delete;

    const workflow::ProjectStore& store() const noexcept { return store_; }

    // Body: {content, gen_config?, review_config?, review_instructions?}.
    Reply create_project(const nlohmann::json& body);
    workflow::Project get_project(const std::string& id) const;
    std::vector<std::string> list_projects() const;
    nlohmann::json progress(const std::string& id) const;

    Reply generate(const std::string& id);
    // Body: {extra?}; a given `extra` replaces the stored review instructions.
    Reply review(const std::string& id, const nlohmann::json& body);
    // Body: {mode: "all"|"selective", picks?: [{scene_index, field}]}.
    Reply apply(const std::string& id, const nlohmann::json& body);
    // Body: {blueprint} or {script: text}; optional base_revision_id guards
    // against stale edits.
    Reply edit_script(const std::string& id, const nlohmann::json& body);
    // Body: {gen_config?, review_config?}; allowed in setup and drafted.
    Reply update_config(const std::string& id, const nlohmann::json& body);
    Reply finalize(const std::string& id);
    // Body: {per_scene_duration_s?}.
    Reply render(const std::string& id, const nlohmann::json& body);
    nlohmann::json render_status(const std::string& id) const;
    Reply reopen(const std::string& id);

    // Uploads are validated, then stored canonically under <store>/eval/.
    nlohmann::json upload_ratings(std::string_view csv);
    nlohmann::json upload_usability(std::string_view csv);
    nlohmann::json upload_demographics(std::string_view csv);
    // kind: improvement | topics | subgroup | descriptive. Parameters:
    // item (topics), source = ratings|usability and partition, groups
    // ("value=group,...") for subgroup/descriptive.
    nlohmann::json eval_report(const std::string& kind, const std::map<std::string, std::string>& params) const;

    // Blocks until background work has finished.
    void wait_idle();

private:
    nlohmann::json mutation_data(const workflow::Project& p) const;
    workflow::Project load(const std::string& id) const;
    void save(workflow::Project& p);
    void run_background(std::function<void()> task);
    // Reloads the project under its lock and applies `update`; failures are
    // recorded as last_error instead of escaping the worker thread.
    void update_in_background(const std::string& id, const std::function<void(workflow::Project&)>& update);
    std::filesystem::path eval_dir() const;

    workflow::ProjectStore store_;
    Backends backends_;
    Clock clock_;
    IdSource ids_;
    mutable workflow::WriterLocks locks_;
    std::mutex create_mutex_;
    mutable std::mutex eval_mutex_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
};

// Maps an error code onto an HTTP status: 404 not_found, 409 for workflow
// conflicts, 502 for backend failures, 500 for storage faults, else 422.
int http_status_for(const std::string& code);

nlohmann::json ok_envelope(const nlohmann::json& data);
nlohmann::json error_envelope(const std::string& code, const std::string& message,
                              const nlohmann::json& detail = nlohmann::json::object());

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string content_type;
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Transport-free router; the HTTP server is a thin shell around it.
ApiResponse route(StudioService& service, const ApiRequest& request);

// Binds the router to a socket. run() blocks until stop().
class HttpServer {
public:
    HttpServer(StudioService& service, std::string cors_origin = {});
    ~HttpServer();

    // Returns the bound port (useful with port 0), or -1 on failure.
    int bind(const std::string& host, int port);
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace pedaco::studio
