#include "pedaco/workflow.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pedaco/json_forms.hpp"

namespace pedaco::workflow {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(StateKind kind) {
    switch (kind) {
    case StateKind::setup: return "setup";
    case StateKind::drafted: return "drafted";
    case StateKind::review_pending: return "review_pending";
    case StateKind::review_ready: return "review_ready";
    case StateKind::finalized: return "finalized";
    case StateKind::rendering: return "rendering";
    case StateKind::complete: return "complete";
    case StateKind::failed: return "failed";
    }
    return "setup";
}

std::optional<StateKind> state_kind_from_string(std::string_view name) {
    for (StateKind k : {StateKind::setup, StateKind::drafted, StateKind::review_pending, StateKind::review_ready,
                        StateKind::finalized, StateKind::rendering, StateKind::complete, StateKind::failed}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::generate_script: return "generate_script";
    case EventKind::script_arrived: return "script_arrived";
    case EventKind::request_review: return "request_review";
    case EventKind::review_arrived: return "review_arrived";
    case EventKind::apply_feedback: return "apply_feedback";
    case EventKind::apply_selective: return "apply_selective";
    case EventKind::edit_script: return "edit_script";
    case EventKind::finalize_script: return "finalize_script";
    case EventKind::create_video: return "create_video";
    case EventKind::render_done: return "render_done";
    case EventKind::render_failed: return "render_failed";
    case EventKind::reopen: return "reopen";
    }
    return "generate_script";
}

namespace {

std::string describe(const ProjectState& s) {
    std::string out(to_string(s.kind));
    if (s.kind == StateKind::setup && s.awaiting_script) out += " (awaiting script)";
    return out;
}

// The declared table; nullopt marks an illegal pair.
std::optional<ProjectState> next_state(const ProjectState& s, const WorkflowEvent& e) {
    using K = StateKind;
    using E = EventKind;
    switch (s.kind) {
    case K::setup:
        if (!s.awaiting_script && e.kind == E::generate_script) return ProjectState{K::setup, true, {}, std::nullopt};
        if (s.awaiting_script && e.kind == E::script_arrived) return ProjectState::of(K::drafted);
        break;
    case K::drafted:
        if (e.kind == E::request_review) return ProjectState::of(K::review_pending);
        if (e.kind == E::edit_script) return ProjectState::of(K::drafted);
        if (e.kind == E::finalize_script) return ProjectState::of(K::finalized);
        break;
    case K::review_pending:
        if (e.kind == E::review_arrived) return ProjectState::of(K::review_ready);
        break;
    case K::review_ready:
        if (e.kind == E::apply_feedback || e.kind == E::apply_selective || e.kind == E::edit_script) {
            return ProjectState::of(K::drafted);
        }
        break;
    case K::finalized:
        if (e.kind == E::create_video) return ProjectState::of(K::rendering);
        break;
    case K::rendering:
        if (e.kind == E::render_done) return ProjectState::of(K::complete);
        if (e.kind == E::render_failed) return ProjectState::failed(e.reason, K::rendering);
        break;
    case K::complete:
        if (e.kind == E::reopen) return ProjectState::of(K::drafted);
        break;
    case K::failed:
        if (e.kind == E::reopen) return ProjectState::of(K::finalized);
        break;
    }
    return std::nullopt;
}

} // namespace

IllegalTransition::IllegalTransition(const ProjectState& state, EventKind event)
    : Error("illegal_transition",
            "event '" + std::string(to_string(event)) + "' is not allowed in state '" + describe(state) + "'",
            json{{"state", std::string(to_string(state.kind))}, {"event", std::string(to_string(event))}}),
      state_(state.kind), event_(event) {}

ProjectState transition(const ProjectState& state, const WorkflowEvent& event) {
    auto next = next_state(state, event);
    if (!next) throw IllegalTransition(state, event.kind);
    return *next;
}

bool is_legal(const ProjectState& state, EventKind event) {
    return next_state(state, WorkflowEvent{event, {}}).has_value();
}

std::vector<EventKind> legal_events(const ProjectState& state) {
    std::vector<EventKind> out;
    for (EventKind e : kAllEvents) {
        if (is_legal(state, e)) out.push_back(e);
    }
    return out;
}

Progress progress(const ProjectState& state) {
    switch (state.kind) {
    case StateKind::setup: return {1, "setup"};
    case StateKind::drafted: return {2, "drafted"};
    case StateKind::review_pending: return {2, "review-pending"};
    case StateKind::review_ready: return {2, "review-ready"};
    case StateKind::finalized: return {3, "finalized"};
    case StateKind::rendering: return {3, "rendering"};
    case StateKind::complete: return {3, "complete"};
    case StateKind::failed: {
        // Stays in the phase it failed from.
        int phase = 3;
        if (state.prior && *state.prior != StateKind::failed) phase = progress(ProjectState::of(*state.prior)).phase;
        return {phase, "failed"};
    }
    }
    return {1, "setup"};
}

std::string_view to_string(RevisionSource source) {
    switch (source) {
    case RevisionSource::generated: return "generated";
    case RevisionSource::review_applied: return "review_applied";
    case RevisionSource::manual_edit: return "manual_edit";
    }
    return "generated";
}

std::optional<RevisionSource> revision_source_from_string(std::string_view name) {
    for (RevisionSource s : {RevisionSource::generated, RevisionSource::review_applied, RevisionSource::manual_edit}) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    if (s.size() != 20) return std::nullopt;
    int y = 0;
    unsigned mo = 0, d = 0;
    int h = 0, mi = 0, se = 0;
    char tail = 0;
    const std::string str(s);
    if (std::sscanf(str.c_str(), "%4d-%2u-%2uT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &se, &tail) != 7 || tail != 'Z') {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 59) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

Project record_revision(Project p, blueprint::ScriptBlueprint bp, RevisionSource source, Timestamp now) {
    if (bp.empty()) {
        throw blueprint::BlueprintError(blueprint::BlueprintErrc::invariant_violation, "a revision needs at least one scene");
    }
    bp = blueprint::normalize_indices(std::move(bp));
    blueprint::validate_blueprint(bp);
    bp.revision_id = p.revision_id() + 1;
    p.revisions.push_back(Revision{std::move(bp), source});
    p.updated_at = now;
    return p;
}

void check_invariants(const Project& p) {
    auto fail = [&](const std::string& what) {
        throw Error("invalid_project", "project '" + p.id + "': " + what);
    };
    int previous = 0;
    for (const auto& r : p.revisions) {
        if (r.blueprint.revision_id <= previous) fail("revision ids are not strictly increasing");
        previous = r.blueprint.revision_id;
        if (r.blueprint.empty()) fail("revision " + std::to_string(previous) + " has no scenes");
    }
    for (std::size_t k = 0; k < p.reviews.size(); ++k) {
        if (p.reviews[k].iteration != static_cast<int>(k) + 1) {
            fail("review " + std::to_string(k + 1) + " carries iteration " + std::to_string(p.reviews[k].iteration));
        }
    }
    const ProjectState& s = p.state;
    if (s.awaiting_script && s.kind != StateKind::setup) fail("only setup may await a script");
    if (s.kind == StateKind::failed) {
        if (!s.prior || *s.prior == StateKind::failed) fail("failed state without a resumable prior state");
    } else if (s.prior || !s.reason.empty()) {
        fail("state '" + std::string(to_string(s.kind)) + "' carries failure details");
    }
    if (s.kind != StateKind::setup && p.revisions.empty()) fail("no revisions past setup");
    if (s.kind == StateKind::review_ready && p.reviews.empty()) fail("review_ready without a review");
    if (s.kind == StateKind::complete && !p.render) fail("complete without a render manifest");
}

// --- persistence -----------------------------------------------------------

nlohmann::json state_to_json(const ProjectState& s) {
    return json{{"kind", std::string(to_string(s.kind))},
                {"awaiting", s.awaiting_script},
                {"reason", s.reason},
                {"prior", s.prior ? json(std::string(to_string(*s.prior))) : json(nullptr)}};
}

nlohmann::json project_to_json(const Project& p) {
    json revisions = json::array();
    for (const auto& r : p.revisions) {
        json j = r.blueprint;
        j["source"] = std::string(to_string(r.source));
        revisions.push_back(std::move(j));
    }
    return json{{"schema", kSchemaVersion},
                {"id", p.id},
                {"content", p.content},
                {"gen_config", p.gen_config},
                {"review_config", p.review_config},
                {"revisions", std::move(revisions)},
                {"reviews", p.reviews},
                {"render", p.render ? json(*p.render) : json(nullptr)},
                {"render_partial", p.render_partial},
                {"review_instructions", p.review_instructions ? json(*p.review_instructions) : json(nullptr)},
                {"last_error", p.last_error ? json(*p.last_error) : json(nullptr)},
                {"state", state_to_json(p.state)},
                {"created_at", format_timestamp(p.created_at)},
                {"updated_at", format_timestamp(p.updated_at)}};
}

namespace {

[[noreturn]] void corrupt(const std::string& cause, json detail = json::object()) {
    detail["cause"] = cause;
    throw StoreError(StoreErrc::corrupt_file, "corrupt project file: " + cause, std::move(detail));
}

std::optional<std::string> nullable_string(const json& doc, const char* key) {
    const json& v = doc.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<std::string>();
}

Timestamp timestamp_at(const json& doc, const char* key) {
    auto t = parse_timestamp(doc.at(key).get<std::string>());
    if (!t) corrupt(std::string("bad timestamp in '") + key + "'");
    return *t;
}

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

} // namespace

Project project_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_number_integer()) {
        corrupt("missing schema version");
    }
    const int version = doc["schema"].get<int>();
    if (version != kSchemaVersion) {
        corrupt("unsupported schema version " + std::to_string(version), {{"version", version}});
    }
    Project p;
    try {
        p.id = doc.at("id").get<std::string>();
        p.content = doc.at("content").get<std::string>();
        p.gen_config = prompt::prompt_config_from_json(doc.at("gen_config"), prompt::Mode::generation);
        p.review_config = prompt::prompt_config_from_json(doc.at("review_config"), prompt::Mode::review);
        for (const auto& r : doc.at("revisions")) {
            auto source = revision_source_from_string(r.at("source").get<std::string>());
            if (!source) corrupt("unknown revision source");
            p.revisions.push_back(Revision{r.get<blueprint::ScriptBlueprint>(), *source});
        }
        p.reviews = doc.at("reviews").get<std::vector<review::ReviewReport>>();
        if (!doc.at("render").is_null()) p.render = doc["render"].get<gateway::RenderManifest>();
        p.render_partial = doc.value("render_partial", json::array()).get<std::vector<gateway::Clip>>();
        p.review_instructions = nullable_string(doc, "review_instructions");
        p.last_error = nullable_string(doc, "last_error");

        const json& st = doc.at("state");
        auto kind = state_kind_from_string(st.at("kind").get<std::string>());
        if (!kind) corrupt("unknown state kind");
        p.state.kind = *kind;
        p.state.awaiting_script = st.at("awaiting").get<bool>();
        p.state.reason = st.at("reason").get<std::string>();
        if (!st.at("prior").is_null()) {
            p.state.prior = state_kind_from_string(st["prior"].get<std::string>());
            if (!p.state.prior) corrupt("unknown prior state");
        }
        p.created_at = timestamp_at(doc, "created_at");
        p.updated_at = timestamp_at(doc, "updated_at");
        check_invariants(p);
    } catch (const StoreError&) {
        throw;
    } catch (const Error& e) {
        corrupt(e.what(), {{"code", e.code()}});
    } catch (const json::exception& e) {
        corrupt(e.what());
    }
    return p;
}

std::string_view to_string(StoreErrc code) {
    switch (code) {
    case StoreErrc::not_found: return "not_found";
    case StoreErrc::corrupt_file: return "corrupt_file";
    case StoreErrc::io_error: return "io_error";
    }
    return "io_error";
}

StoreError::StoreError(StoreErrc kind, const std::string& message, nlohmann::json detail)
    : Error(std::string(to_string(kind)), message, std::move(detail)), kind_(kind) {}

ProjectStore::ProjectStore(fs::path root) : root_(std::move(root)) {}

fs::path ProjectStore::file_for(const std::string& id) const { return root_ / id / "project.json"; }

std::string ProjectStore::save(const Project& p) const {
    if (!valid_id(p.id)) throw Error("invalid_project", "project id '" + p.id + "' is not a safe token");
    check_invariants(p);
    const fs::path target = file_for(p.id);
    const fs::path tmp = target.string() + ".tmp";
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw StoreError(StoreErrc::io_error, "cannot create " + target.parent_path().string() + ": " + ec.message());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << project_to_json(p).dump(2) << '\n';
        out.flush();
        if (!out) throw StoreError(StoreErrc::io_error, "cannot write " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw StoreError(StoreErrc::io_error, "cannot replace " + target.string() + ": " + ec.message());
    return p.id;
}

Project ProjectStore::load(const std::string& id) const {
    if (!valid_id(id) || !fs::exists(file_for(id))) {
        throw StoreError(StoreErrc::not_found, "no project '" + id + "'", {{"id", id}});
    }
    std::ifstream in(file_for(id), std::ios::binary);
    if (!in) throw StoreError(StoreErrc::io_error, "cannot read " + file_for(id).string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) corrupt("not valid JSON", {{"id", id}});
    return project_from_json(doc);
}

bool ProjectStore::exists(const std::string& id) const { return valid_id(id) && fs::exists(file_for(id)); }

std::vector<std::string> ProjectStore::list() const {
    std::vector<std::string> ids;
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) return ids;
    for (const auto& entry : fs::directory_iterator(root_, ec)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_directory() && valid_id(name) && fs::exists(entry.path() / "project.json")) ids.push_back(name);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::unique_lock<std::mutex> WriterLocks::acquire(const std::string& id) {
    std::shared_ptr<std::mutex> m;
    {
        std::lock_guard<std::mutex> guard(guard_);
        auto& slot = locks_[id];
        if (!slot) slot = std::make_shared<std::mutex>();
        m = slot;
    }
    // The map never drops entries, so the mutex outlives the returned lock.
    return std::unique_lock<std::mutex>(*m);
}

} // namespace pedaco::workflow
