#pragma once

// Project state machine (setup -> refinement -> output), append-only
// revision history and the on-disk project store.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/blueprint.hpp"
#include "pedaco/error.hpp"
#include "pedaco/gateway.hpp"
#include "pedaco/prompt.hpp"
#include "pedaco/review.hpp"

namespace pedaco::workflow {

enum class StateKind { setup, drafted, review_pending, review_ready, finalized, rendering, complete, failed };

std::string_view to_string(StateKind kind);
std::optional<StateKind> state_kind_from_string(std::string_view name);

struct ProjectState {
    StateKind kind = StateKind::setup;
    // Setup only: a GenerateScript request is outstanding.
    bool awaiting_script = false;
    // Failed only: why, and the state to resume from.
    std::string reason;
    std::optional<StateKind> prior;

    static ProjectState of(StateKind kind) { return ProjectState{kind, false, {}, std::nullopt}; }
    static ProjectState failed(std::string reason, StateKind prior) {
        return ProjectState{StateKind::failed, false, std::move(reason), prior};
    }

    bool operator==(const ProjectState&) const = default;
};

enum class EventKind {
    generate_script,
    script_arrived,
    request_review,
    review_arrived,
    apply_feedback,
    apply_selective,
    edit_script,
    finalize_script,
    create_video,
    render_done,
    render_failed,
    reopen,
};

inline constexpr EventKind kAllEvents[] = {
    EventKind::generate_script, EventKind::script_arrived, EventKind::request_review,  EventKind::review_arrived,
    EventKind::apply_feedback,  EventKind::apply_selective, EventKind::edit_script,    EventKind::finalize_script,
    EventKind::create_video,    EventKind::render_done,    EventKind::render_failed, EventKind::reopen,
};

std::string_view to_string(EventKind kind);

// Payloads (scripts, reports, manifests) are applied by the caller; the
// state machine only needs the event kind and, for RenderFailed, a reason.
struct WorkflowEvent {
    EventKind kind;
    std::string reason;
};

class IllegalTransition : public Error {
public:
    IllegalTransition(const ProjectState& state, EventKind event);
    StateKind state() const noexcept { return state_; }
    EventKind event() const noexcept { return event_; }

private:
    StateKind state_;
    EventKind event_;
};

ProjectState transition(const ProjectState& state, const WorkflowEvent& event);
bool is_legal(const ProjectState& state, EventKind event);
std::vector<EventKind> legal_events(const ProjectState& state);

struct Progress {
    int phase = 1;
    std::string step_label;

    bool operator==(const Progress&) const = default;
};

Progress progress(const ProjectState& state);

enum class RevisionSource { generated, review_applied, manual_edit };

std::string_view to_string(RevisionSource source);
std::optional<RevisionSource> revision_source_from_string(std::string_view name);

struct Revision {
    blueprint::ScriptBlueprint blueprint;
    RevisionSource source = RevisionSource::generated;

    bool operator==(const Revision&) const = default;
};

using Timestamp = std::chrono::sys_seconds;

std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view s);

struct Project {
    std::string id;
    std::string content;
    prompt::PromptConfig gen_config = prompt::default_generation_config();
    prompt::PromptConfig review_config = prompt::default_review_config();
    std::vector<Revision> revisions;
    std::vector<review::ReviewReport> reviews;
    std::optional<gateway::RenderManifest> render;
    // Clips kept from a partially failed render, reused on retry.
    std::vector<gateway::Clip> render_partial;
    std::optional<std::string> review_instructions;
    std::optional<std::string> last_error;
    ProjectState state;
    Timestamp created_at{};
    Timestamp updated_at{};

    const Revision* latest() const { return revisions.empty() ? nullptr : &revisions.back(); }
    int revision_id() const { return revisions.empty() ? 0 : revisions.back().blueprint.revision_id; }

    bool operator==(const Project&) const = default;
};

// Appends bp as the next revision; the stored copy is normalized and gets
// revision_id = previous + 1.
Project record_revision(Project p, blueprint::ScriptBlueprint bp, RevisionSource source, Timestamp now);

// Throws Error("invalid_project") describing the first violated invariant.
void check_invariants(const Project& p);

inline constexpr int kSchemaVersion = 1;

nlohmann::json state_to_json(const ProjectState& s);
nlohmann::json project_to_json(const Project& p);
// Throws StoreError(corrupt_file) on schema or content problems.
Project project_from_json(const nlohmann::json& doc);

enum class StoreErrc { not_found, corrupt_file, io_error };

std::string_view to_string(StoreErrc code);

class StoreError : public Error {
public:
    StoreError(StoreErrc kind, const std::string& message, nlohmann::json detail = nlohmann::json::object());
    StoreErrc kind() const noexcept { return kind_; }

private:
    StoreErrc kind_;
};

// One directory per project: <root>/<id>/project.json, written atomically.
class ProjectStore {
public:
    explicit ProjectStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path file_for(const std::string& id) const;

    std::string save(const Project& p) const;
    Project load(const std::string& id) const;
    bool exists(const std::string& id) const;
    std::vector<std::string> list() const;

private:
    std::filesystem::path root_;
};

// Per-project single-writer lock; distinct projects never contend.
class WriterLocks {
public:
    std::unique_lock<std::mutex> acquire(const std::string& id);

private:
    std::mutex guard_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

} // namespace pedaco::workflow
