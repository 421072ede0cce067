#include "pedaco/studio.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pedaco/json_forms.hpp"
#include "text_util.hpp"

namespace pedaco::studio {

using nlohmann::json;
using workflow::EventKind;
using workflow::Project;
using workflow::ProjectState;
using workflow::StateKind;
using workflow::WorkflowEvent;
namespace fs = std::filesystem;

workflow::Timestamp system_clock_seconds() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string random_project_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard<std::mutex> lock(m);
    char buf[24];
    std::snprintf(buf, sizeof buf, "p-%012llx", static_cast<unsigned long long>(rng() & 0xFFFFFFFFFFFFULL));
    return buf;
}

// --- configuration ---------------------------------------------------------

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error("invalid_config", what); }

std::string config_string(const json& j, const char* key) {
    if (!j[key].is_string()) bad_config(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
}

double config_number(const json& j, const char* key) {
    if (!j[key].is_number()) bad_config(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

int config_int(const json& j, const char* key) {
    if (!j[key].is_number_integer()) bad_config(std::string("'") + key + "' must be an integer");
    return j[key].get<int>();
}

} // namespace

StudioConfig StudioConfig::from_json(const json& j, const fs::path& base_dir) {
    static const std::set<std::string> known = {"store_root",     "host",           "port",         "cors_origin",
                                                "live",           "mock_fixtures",  "text_endpoint", "text_api_key",
                                                "video_endpoint", "video_api_key",  "timeout_s",     "retries",
                                                "render_parallelism"};
    if (!j.is_object()) bad_config("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) bad_config("unknown config key '" + key + "'");
    }
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base_dir.empty() ? fs::path(p) : base_dir / p; };

    StudioConfig c;
    c.gateways = gateway::GatewaySettings::from_env();
    if (j.contains("store_root")) c.store_root = resolve(config_string(j, "store_root"));
    if (j.contains("host")) c.host = config_string(j, "host");
    if (j.contains("port")) {
        c.port = config_int(j, "port");
        if (c.port < 0 || c.port > 65535) bad_config("'port' must be 0..65535");
    }
    if (j.contains("cors_origin")) c.cors_origin = config_string(j, "cors_origin");
    if (j.contains("live")) {
        if (!j["live"].is_boolean()) bad_config("'live' must be a boolean");
        c.live = j["live"].get<bool>();
    }
    if (j.contains("mock_fixtures")) c.mock_fixtures = resolve(config_string(j, "mock_fixtures"));
    if (j.contains("timeout_s")) {
        c.gateways.timeout_s = config_number(j, "timeout_s");
        if (!(c.gateways.timeout_s > 0)) bad_config("'timeout_s' must be positive");
    }
    if (j.contains("retries")) {
        c.gateways.retries = config_int(j, "retries");
        if (c.gateways.retries < 0) bad_config("'retries' must be non-negative");
    }
    if (j.contains("render_parallelism")) {
        c.gateways.render_parallelism = config_int(j, "render_parallelism");
        if (c.gateways.render_parallelism < 1) bad_config("'render_parallelism' must be at least 1");
    }
    auto endpoint = [&](const char* url_key, const char* key_key, std::optional<gateway::HttpEndpoint>& slot) {
        if (j.contains(url_key)) {
            if (!slot) slot.emplace();
            slot->url = config_string(j, url_key);
        }
        if (j.contains(key_key)) {
            if (!slot) slot.emplace();
            slot->api_key = config_string(j, key_key);
        }
        if (slot) slot->timeout_s = c.gateways.timeout_s;
    };
    endpoint("text_endpoint", "text_api_key", c.gateways.text);
    endpoint("video_endpoint", "video_api_key", c.gateways.video);
    return c;
}

StudioConfig StudioConfig::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) bad_config("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) bad_config("config file " + path.string() + " is not valid JSON");
    return from_json(j, path.parent_path());
}

Backends mock_backends(const std::optional<fs::path>& fixtures) {
    auto fallback = [](const std::string& prompt) { return gateway::synthetic_response(prompt); };
    Backends b;
    if (fixtures) {
        b.text = std::make_shared<gateway::MockTextGenerator>(gateway::MockTextGenerator::load_fixtures(*fixtures),
                                                              fallback);
    } else {
        b.text = std::make_shared<gateway::MockTextGenerator>(std::map<std::string, std::string>{}, fallback);
    }
    b.video = std::make_shared<gateway::MockVideoSynthesizer>();
    return b;
}

Backends live_backends(const gateway::GatewaySettings& settings) {
    if (!settings.text || settings.text->url.empty()) bad_config("live mode needs a text generation endpoint");
    if (!settings.video || settings.video->url.empty()) bad_config("live mode needs a video generation endpoint");
    Backends b;
    b.text = std::make_shared<gateway::HttpTextGenerator>(*settings.text);
    b.video = std::make_shared<gateway::HttpVideoSynthesizer>(*settings.video);
    b.retry.retries = settings.retries;
    b.render_parallelism = settings.render_parallelism;
    b.asynchronous = true;
    return b;
}

Backends backends_for(const StudioConfig& config) {
    if (config.live) return live_backends(config.gateways);
    Backends b = mock_backends(config.mock_fixtures);
    b.retry.retries = config.gateways.retries;
    b.render_parallelism = config.gateways.render_parallelism;
    return b;
}

// --- service ---------------------------------------------------------------

namespace {

const json& body_object(const json& body) {
    static const json empty = json::object();
    if (body.is_null()) return empty;
    if (!body.is_object()) throw Error("invalid_json", "request body must be a JSON object");
    return body;
}

prompt::PromptConfig merged_config(const prompt::PromptConfig& current, const json& patch, prompt::Mode mode,
                                   const char* name) {
    if (!patch.is_object()) throw Error("invalid_json", std::string("'") + name + "' must be an object");
    json doc = current;
    doc.merge_patch(patch);
    auto config = prompt::prompt_config_from_json(doc, mode);
    if (config.mode != mode) {
        throw Error("invalid_config", std::string("'") + name + "' must use mode " + std::string(prompt::to_string(mode)));
    }
    return config;
}

const blueprint::ScriptBlueprint& latest_blueprint(const Project& p) {
    if (!p.latest()) throw Error("invalid_project", "project '" + p.id + "' has no script yet");
    return p.latest()->blueprint;
}

json accepted(json data, const std::string& id, const std::string& what) {
    data["pending"] = what;
    data["status_url"] = "/projects/" + id + "/progress";
    return data;
}

} // namespace

StudioService::StudioService(fs::path store_root, Backends backends, Clock clock, IdSource ids)
    : store_(std::move(store_root)), backends_(std::move(backends)), clock_(std::move(clock)), ids_(std::move(ids)) {
    if (!backends_.text || !backends_.video) bad_config("both a text and a video backend are required");
}

StudioService::~StudioService() { wait_idle(); }

void StudioService::wait_idle() {
    while (true) {
        std::vector<std::thread> batch;
        {
            std::lock_guard<std::mutex> lock(workers_mutex_);
            batch.swap(workers_);
        }
        if (batch.empty()) return;
        for (auto& t : batch) t.join();
    }
}

void StudioService::run_background(std::function<void()> task) {
    std::lock_guard<std::mutex> lock(workers_mutex_);
    workers_.emplace_back(std::move(task));
}

void StudioService::update_in_background(const std::string& id, const std::function<void(Project&)>& update) {
    auto lock = locks_.acquire(id);
    try {
        Project p = store_.load(id);
        try {
            update(p);
        } catch (const std::exception& e) {
            p = store_.load(id);
            p.last_error = e.what();
        }
        save(p);
    } catch (const std::exception&) {
        // Store unreadable; nothing left to record the failure in.
    }
}

Project StudioService::load(const std::string& id) const { return store_.load(id); }

void StudioService::save(Project& p) {
    p.updated_at = clock_();
    store_.save(p);
}

json StudioService::mutation_data(const Project& p) const {
    const auto prog = workflow::progress(p.state);
    return json{{"id", p.id},
                {"state", workflow::state_to_json(p.state)},
                {"revision_id", p.revision_id()},
                {"progress", {{"phase", prog.phase}, {"step_label", prog.step_label}}},
                {"last_error", p.last_error ? json(*p.last_error) : json(nullptr)}};
}

Reply StudioService::create_project(const json& raw) {
    const json& body = body_object(raw);
    if (!body.contains("content") || !body["content"].is_string()) {
        throw Error("invalid_json", "'content' must be a string");
    }
    const std::string content = body["content"].get<std::string>();
    if (text::trim(content).empty()) {
        throw prompt::PromptError(prompt::PromptErrc::empty_content, "learning content is empty");
    }
    Project p;
    p.content = content;
    if (body.contains("gen_config")) {
        p.gen_config = merged_config(p.gen_config, body["gen_config"], prompt::Mode::generation, "gen_config");
    }
    if (body.contains("review_config")) {
        p.review_config = merged_config(p.review_config, body["review_config"], prompt::Mode::review, "review_config");
    }
    if (body.contains("review_instructions") && !body["review_instructions"].is_null()) {
        if (!body["review_instructions"].is_string()) throw Error("invalid_json", "'review_instructions' must be a string");
        p.review_instructions = body["review_instructions"].get<std::string>();
    }
    p.created_at = clock_();
    p.updated_at = p.created_at;

    std::lock_guard<std::mutex> guard(create_mutex_);
    for (int attempt = 0;; ++attempt) {
        p.id = ids_();
        if (!store_.exists(p.id)) break;
        if (attempt > 16) throw Error("io_error", "could not allocate a fresh project id");
    }
    store_.save(p);
    return Reply{201, mutation_data(p)};
}

Project StudioService::get_project(const std::string& id) const { return load(id); }

std::vector<std::string> StudioService::list_projects() const { return store_.list(); }

json StudioService::progress(const std::string& id) const {
    const Project p = load(id);
    const auto prog = workflow::progress(p.state);
    json legal = json::array();
    for (EventKind e : workflow::legal_events(p.state)) legal.push_back(std::string(workflow::to_string(e)));
    const bool pending = p.state.awaiting_script || p.state.kind == StateKind::review_pending ||
                         p.state.kind == StateKind::rendering;
    return json{{"id", p.id},
                {"phase", prog.phase},
                {"step_label", prog.step_label},
                {"state", workflow::state_to_json(p.state)},
                {"pending", pending},
                {"legal_events", legal},
                {"revision_id", p.revision_id()},
                {"last_error", p.last_error ? json(*p.last_error) : json(nullptr)}};
}

Reply StudioService::generate(const std::string& id) {
    auto lock = locks_.acquire(id);
    Project p = load(id);
    const ProjectState waiting = workflow::transition(p.state, WorkflowEvent{EventKind::generate_script, {}});

    if (backends_.asynchronous) {
        p.state = waiting;
        p.last_error.reset();
        save(p);
        run_background([this, id, snapshot = p] {
            std::optional<gateway::ScriptOutcome> outcome;
            std::string failure;
            try {
                outcome = gateway::generate_script(*backends_.text, snapshot.gen_config, snapshot.content,
                                                   backends_.retry);
            } catch (const std::exception& e) {
                failure = e.what();
            }
            update_in_background(id, [&](Project& q) {
                if (!outcome) {
                    // No table edge for a lost request: drop the pending marker.
                    q.state = ProjectState::of(StateKind::setup);
                    q.last_error = failure;
                    return;
                }
                q.state = workflow::transition(q.state, WorkflowEvent{EventKind::script_arrived, {}});
                q = workflow::record_revision(std::move(q), outcome->blueprint, workflow::RevisionSource::generated,
                                              clock_());
                q.last_error.reset();
            });
        });
        return Reply{202, accepted(mutation_data(p), id, "generate")};
    }

    gateway::ScriptOutcome outcome;
    try {
        outcome = gateway::generate_script(*backends_.text, p.gen_config, p.content, backends_.retry);
    } catch (const Error& e) {
        p.last_error = e.what();
        save(p);
        throw;
    }
    p.state = workflow::transition(waiting, WorkflowEvent{EventKind::script_arrived, {}});
    p = workflow::record_revision(std::move(p), outcome.blueprint, workflow::RevisionSource::generated, clock_());
    p.last_error.reset();
    p.render_partial.clear();
    save(p);
    json data = mutation_data(p);
    data["blueprint"] = p.latest()->blueprint;
    data["attempts"] = outcome.attempts;
    data["warnings"] = outcome.warnings;
    return Reply{200, data};
}

Reply StudioService::review(const std::string& id, const json& raw) {
    const json& body = body_object(raw);
    auto lock = locks_.acquire(id);
    Project p = load(id);
    const ProjectState pending = workflow::transition(p.state, WorkflowEvent{EventKind::request_review, {}});
    if (body.contains("extra") && !body["extra"].is_null()) {
        if (!body["extra"].is_string()) throw Error("invalid_json", "'extra' must be a string");
        const std::string extra = body["extra"].get<std::string>();
        if (text::trim(extra).empty()) {
            p.review_instructions.reset();
        } else {
            p.review_instructions = extra;
        }
    }
    const blueprint::ScriptBlueprint reviewed = latest_blueprint(p);
    const int iteration = static_cast<int>(p.reviews.size()) + 1;

    if (backends_.asynchronous) {
        p.state = pending;
        p.last_error.reset();
        save(p);
        run_background([this, id, snapshot = p, reviewed, iteration] {
            std::optional<gateway::ReviewOutcome> outcome;
            std::string failure;
            try {
                std::optional<std::string_view> extra;
                if (snapshot.review_instructions) extra = *snapshot.review_instructions;
                outcome = gateway::request_review(*backends_.text, snapshot.review_config, snapshot.content, reviewed,
                                                  extra, iteration, backends_.retry);
            } catch (const std::exception& e) {
                failure = e.what();
            }
            update_in_background(id, [&](Project& q) {
                if (!outcome) {
                    q.state = ProjectState::of(StateKind::drafted);
                    q.last_error = failure;
                    return;
                }
                q.state = workflow::transition(q.state, WorkflowEvent{EventKind::review_arrived, {}});
                q.reviews.push_back(outcome->report);
                q.last_error.reset();
            });
        });
        return Reply{202, accepted(mutation_data(p), id, "review")};
    }

    gateway::ReviewOutcome outcome;
    try {
        std::optional<std::string_view> extra;
        if (p.review_instructions) extra = *p.review_instructions;
        outcome = gateway::request_review(*backends_.text, p.review_config, p.content, reviewed, extra, iteration,
                                          backends_.retry);
    } catch (const Error& e) {
        p.last_error = e.what();
        save(p);
        throw;
    }
    p.state = workflow::transition(pending, WorkflowEvent{EventKind::review_arrived, {}});
    p.reviews.push_back(outcome.report);
    p.last_error.reset();
    save(p);
    json data = mutation_data(p);
    data["review"] = outcome.report;
    data["delta"] = review::review_delta(reviewed, outcome.report);
    data["attempts"] = outcome.attempts;
    return Reply{200, data};
}

Reply StudioService::apply(const std::string& id, const json& raw) {
    const json& body = body_object(raw);
    const std::string mode = body.value("mode", std::string("all"));
    if (mode != "all" && mode != "selective") throw Error("invalid_json", "'mode' must be all or selective");
    std::set<review::Pick> picks;
    if (mode == "selective") {
        if (!body.contains("picks") || !body["picks"].is_array()) {
            throw Error("invalid_json", "selective apply needs a 'picks' array");
        }
        for (const auto& pick : body["picks"]) picks.insert(pick.get<review::Pick>());
    }

    auto lock = locks_.acquire(id);
    Project p = load(id);
    const EventKind event = mode == "all" ? EventKind::apply_feedback : EventKind::apply_selective;
    const ProjectState next = workflow::transition(p.state, WorkflowEvent{event, {}});
    const review::ReviewReport& report = p.reviews.back();
    const blueprint::ScriptBlueprint& current = latest_blueprint(p);
    blueprint::ScriptBlueprint applied =
        mode == "all" ? review::apply_all(current, report) : review::apply_selective(current, report, picks);
    p.state = next;
    p = workflow::record_revision(std::move(p), std::move(applied), workflow::RevisionSource::review_applied, clock_());
    p.render_partial.clear();
    save(p);
    json data = mutation_data(p);
    data["blueprint"] = p.latest()->blueprint;
    return Reply{200, data};
}

Reply StudioService::edit_script(const std::string& id, const json& raw) {
    const json& body = body_object(raw);
    blueprint::ScriptBlueprint bp;
    if (body.contains("blueprint")) {
        bp = body["blueprint"].get<blueprint::ScriptBlueprint>();
    } else if (body.contains("script") && body["script"].is_string()) {
        bp = blueprint::parse_blueprint(body["script"].get<std::string>());
    } else {
        throw Error("invalid_json", "body needs a 'blueprint' object or a 'script' string");
    }
    blueprint::validate_blueprint(bp);

    auto lock = locks_.acquire(id);
    Project p = load(id);
    if (body.contains("base_revision_id") && !body["base_revision_id"].is_null()) {
        if (!body["base_revision_id"].is_number_integer()) {
            throw Error("invalid_json", "'base_revision_id' must be an integer");
        }
        const int base = body["base_revision_id"].get<int>();
        if (base != p.revision_id()) {
            throw Error("stale_revision",
                        "edit is based on revision " + std::to_string(base) + " but the project is at " +
                            std::to_string(p.revision_id()),
                        {{"base_revision_id", base}, {"revision_id", p.revision_id()}});
        }
    }
    p.state = workflow::transition(p.state, WorkflowEvent{EventKind::edit_script, {}});
    if (!bp.topic_label && p.latest()) bp.topic_label = p.latest()->blueprint.topic_label;
    p = workflow::record_revision(std::move(p), std::move(bp), workflow::RevisionSource::manual_edit, clock_());
    p.render_partial.clear();
    save(p);
    json data = mutation_data(p);
    data["blueprint"] = p.latest()->blueprint;
    return Reply{200, data};
}

Reply StudioService::update_config(const std::string& id, const json& raw) {
    const json& body = body_object(raw);
    auto lock = locks_.acquire(id);
    Project p = load(id);
    const bool editable = (p.state.kind == StateKind::setup && !p.state.awaiting_script) ||
                          p.state.kind == StateKind::drafted;
    if (!editable) {
        throw Error("config_locked",
                    "prompt settings can only change in setup or drafted, not in " +
                        std::string(workflow::to_string(p.state.kind)),
                    {{"state", std::string(workflow::to_string(p.state.kind))}});
    }
    for (const auto& [key, value] : body.items()) {
        if (key != "gen_config" && key != "review_config") throw Error("invalid_json", "unknown key '" + key + "'");
    }
    if (body.contains("gen_config")) {
        p.gen_config = merged_config(p.gen_config, body["gen_config"], prompt::Mode::generation, "gen_config");
    }
    if (body.contains("review_config")) {
        p.review_config = merged_config(p.review_config, body["review_config"], prompt::Mode::review, "review_config");
    }
    save(p);
    json data = mutation_data(p);
    data["gen_config"] = p.gen_config;
    data["review_config"] = p.review_config;
    return Reply{200, data};
}

Reply StudioService::finalize(const std::string& id) {
    auto lock = locks_.acquire(id);
    Project p = load(id);
    p.state = workflow::transition(p.state, WorkflowEvent{EventKind::finalize_script, {}});
    save(p);
    return Reply{200, mutation_data(p)};
}

Reply StudioService::render(const std::string& id, const json& raw) {
    const json& body = body_object(raw);
    gateway::RenderSettings settings;
    if (body.contains("per_scene_duration_s") && !body["per_scene_duration_s"].is_null()) {
        const json& d = body["per_scene_duration_s"];
        if (!d.is_number() || !(d.get<double>() > 0) || !std::isfinite(d.get<double>())) {
            throw gateway::RenderError(gateway::RenderErrc::invalid_settings,
                                       "per_scene_duration_s must be a positive number");
        }
        settings.per_scene_duration_s = d.get<double>();
    }

    auto lock = locks_.acquire(id);
    Project p = load(id);
    const ProjectState rendering = workflow::transition(p.state, WorkflowEvent{EventKind::create_video, {}});
    const blueprint::ScriptBlueprint bp = latest_blueprint(p);

    // Outcome of a render attempt folded into the project.
    auto settle = [this](Project& q, const gateway::RenderManifest* manifest, const gateway::RenderError* error) {
        if (manifest) {
            q.state = workflow::transition(q.state, WorkflowEvent{EventKind::render_done, {}});
            q.render = *manifest;
            q.render_partial.clear();
            q.last_error.reset();
        } else {
            q.state = workflow::transition(q.state, WorkflowEvent{EventKind::render_failed, error->what()});
            q.render_partial = error->completed();
            q.last_error = error->what();
        }
    };

    if (backends_.asynchronous) {
        p.state = rendering;
        p.last_error.reset();
        save(p);
        run_background([this, id, bp, settings, retained = p.render_partial, settle] {
            std::optional<gateway::RenderManifest> manifest;
            std::optional<gateway::RenderError> error;
            try {
                manifest = gateway::render_video(bp, settings, *backends_.video, backends_.render_parallelism, retained);
            } catch (const gateway::RenderError& e) {
                error = e;
            } catch (const std::exception& e) {
                error.emplace(gateway::RenderErrc::render_failed, e.what());
            }
            update_in_background(id, [&](Project& q) {
                settle(q, manifest ? &*manifest : nullptr, error ? &*error : nullptr);
            });
        });
        return Reply{202, accepted(mutation_data(p), id, "render")};
    }

    p.state = rendering;
    try {
        const auto manifest =
            gateway::render_video(bp, settings, *backends_.video, backends_.render_parallelism, p.render_partial);
        settle(p, &manifest, nullptr);
    } catch (const gateway::RenderError& e) {
        if (e.kind() != gateway::RenderErrc::render_failed) throw;
        settle(p, nullptr, &e);
        save(p);
        throw;
    }
    save(p);
    json data = mutation_data(p);
    data["manifest"] = *p.render;
    return Reply{200, data};
}

json StudioService::render_status(const std::string& id) const {
    const Project p = load(id);
    json data = mutation_data(p);
    switch (p.state.kind) {
    case StateKind::rendering: data["status"] = "rendering"; break;
    case StateKind::complete:
        data["status"] = "complete";
        data["manifest"] = *p.render;
        break;
    case StateKind::failed:
        data["status"] = "failed";
        data["reason"] = p.state.reason;
        data["completed_clips"] = p.render_partial;
        break;
    default: data["status"] = "not_started"; break;
    }
    return data;
}

Reply StudioService::reopen(const std::string& id) {
    auto lock = locks_.acquire(id);
    Project p = load(id);
    const StateKind from = p.state.kind;
    p.state = workflow::transition(p.state, WorkflowEvent{EventKind::reopen, {}});
    if (from == StateKind::complete) {
        // Back to editing: the old manifest no longer describes the script.
        p.render.reset();
        p.render_partial.clear();
    }
    p.last_error.reset();
    save(p);
    return Reply{200, mutation_data(p)};
}

// --- evaluation uploads ----------------------------------------------------

namespace {

void write_atomically(const fs::path& target, const std::string& content) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw Error("io_error", "cannot write " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw Error("io_error", "cannot replace " + target.string() + ": " + ec.message());
}

std::string read_upload(const fs::path& path, const std::string& kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("missing_upload", "no " + kind + " data has been uploaded", {{"kind", kind}});
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename Records>
std::size_t participant_count(const Records& records) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.participant_id);
    return ids.size();
}

std::string param(const std::map<std::string, std::string>& params, const std::string& key, const std::string& fallback) {
    auto it = params.find(key);
    return it == params.end() || it->second.empty() ? fallback : it->second;
}

} // namespace

fs::path StudioService::eval_dir() const { return store_.root() / "eval"; }

json StudioService::upload_ratings(std::string_view csv) {
    const auto records = eval::ingest_ratings(csv);
    std::lock_guard<std::mutex> lock(eval_mutex_);
    write_atomically(eval_dir() / "ratings.csv", eval::ratings_to_csv(records));
    return json{{"kind", "ratings"}, {"records", records.size()}, {"participants", participant_count(records)}};
}

json StudioService::upload_usability(std::string_view csv) {
    const auto records = eval::ingest_usability(csv);
    std::lock_guard<std::mutex> lock(eval_mutex_);
    write_atomically(eval_dir() / "usability.csv", eval::usability_to_csv(records));
    return json{{"kind", "usability"}, {"records", records.size()}, {"participants", participant_count(records)}};
}

json StudioService::upload_demographics(std::string_view csv) {
    const auto records = eval::ingest_demographics(csv);
    std::lock_guard<std::mutex> lock(eval_mutex_);
    write_atomically(eval_dir() / "demographics.csv", eval::demographics_to_csv(records));
    return json{{"kind", "demographics"}, {"records", records.size()}, {"participants", participant_count(records)}};
}

json StudioService::eval_report(const std::string& kind, const std::map<std::string, std::string>& params) const {
    auto load_csv = [&](const std::string& name) {
        std::lock_guard<std::mutex> lock(eval_mutex_);
        return read_upload(eval_dir() / (name + ".csv"), name);
    };
    if (kind == "improvement") {
        const auto rows = eval::improvement_table(eval::ingest_ratings(load_csv("ratings")));
        return json{{"kind", kind}, {"rows", eval::to_json(rows)}, {"text", eval::render_improvement_text(rows)}};
    }
    if (kind == "topics") {
        std::string item = param(params, "item", "13");
        if (!item.empty() && (item.front() == 'Q' || item.front() == 'q')) item.erase(0, 1);
        if (!text::all_digits(item) || item.empty() || item.size() > 2) {
            throw eval::EvalError(eval::EvalErrc::bad_value, "item must be Q1..Q13", {{"item", item}});
        }
        const auto rows = eval::topic_table(eval::ingest_ratings(load_csv("ratings")), std::stoi(item));
        return json{{"kind", kind}, {"rows", eval::to_json(rows)}, {"text", eval::render_topic_text(rows)}};
    }
    const std::string source = param(params, "source", "usability");
    if (source != "usability" && source != "ratings") {
        throw eval::EvalError(eval::EvalErrc::bad_value, "source must be usability or ratings", {{"source", source}});
    }
    if (kind == "subgroup") {
        const std::string partition_name = param(params, "partition", "gender");
        const auto partition = eval::partition_from_string(partition_name);
        if (!partition) {
            throw eval::EvalError(eval::EvalErrc::bad_value, "partition must be gender, career or ai_usage",
                                  {{"partition", partition_name}});
        }
        const auto groups = eval::parse_group_map(param(params, "groups", ""));
        const auto demographics = eval::ingest_demographics(load_csv("demographics"));
        const auto rows = source == "usability"
                              ? eval::subgroup_compare(eval::ingest_usability(load_csv("usability")), demographics,
                                                       *partition, groups)
                              : eval::subgroup_compare(eval::ingest_ratings(load_csv("ratings")), demographics,
                                                       *partition, groups);
        return json{{"kind", kind}, {"rows", eval::to_json(rows)}, {"text", eval::render_subgroup_text(rows)}};
    }
    if (kind == "descriptive") {
        const auto rows = source == "usability" ? eval::descriptive(eval::ingest_usability(load_csv("usability")))
                                                : eval::descriptive(eval::ingest_ratings(load_csv("ratings")));
        return json{{"kind", kind}, {"rows", eval::to_json(rows)}, {"text", eval::render_descriptive_text(rows)}};
    }
    throw Error("invalid_request", "report kind must be improvement, topics, subgroup or descriptive",
                {{"kind", kind}});
}

} // namespace pedaco::studio
