#pragma once

// Reviewer response parsing and feedback application.

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/blueprint.hpp"
#include "pedaco/error.hpp"

namespace pedaco::review {

struct Suggestion {
    int ordinal = 1;
    // Scenes cited by a "Scene <n>" token; empty means a global note.
    std::set<int> scene_refs;
    std::string text;

    bool operator==(const Suggestion&) const = default;
};

struct ReviewReport {
    std::string detailed_results;
    std::vector<Suggestion> suggestions;
    blueprint::ScriptBlueprint revised_script;
    int iteration = 1;

    bool operator==(const ReviewReport&) const = default;
};

inline constexpr std::string_view kDetailedResults = "Detailed Review Results";
inline constexpr std::string_view kSuggestions = "Suggestions for Improvement";
inline constexpr std::string_view kRevisedScript = "Revised Script";

enum class ReviewErrc { missing_section, revised_script_unparseable, unknown_scene_ref, unknown_field };

std::string_view to_string(ReviewErrc code);

class ReviewError : public Error {
public:
    ReviewError(ReviewErrc kind, const std::string& message, nlohmann::json detail = nlohmann::json::object());
    ReviewErrc kind() const noexcept { return kind_; }

private:
    ReviewErrc kind_;
};

std::set<int> extract_scene_refs(std::string_view text);

ReviewReport parse_review(std::string_view text);

// Canonical rendering; parse_review(render_review(r)) reproduces r apart
// from the iteration counter.
std::string render_review(const ReviewReport& report);

// Drops scene references that exist in neither the reviewed script nor the
// revised one. Returns the number of references removed.
int anchor_suggestions(ReviewReport& report, const blueprint::ScriptBlueprint& reviewed);

blueprint::ScriptBlueprint apply_all(const blueprint::ScriptBlueprint& current, const ReviewReport& report);

// A single accept decision: one field of one scene, or the whole scene
// (needed for added and removed scenes).
enum class PickTarget { visual_description, narration, scene };

std::string_view to_string(PickTarget target);
std::optional<PickTarget> pick_target_from_string(std::string_view name);

struct Pick {
    int scene_index = 0;
    PickTarget target = PickTarget::scene;

    auto operator<=>(const Pick&) const = default;
};

blueprint::ScriptBlueprint apply_selective(const blueprint::ScriptBlueprint& current, const ReviewReport& report,
                                           const std::set<Pick>& picks);

std::vector<blueprint::SceneDiff> review_delta(const blueprint::ScriptBlueprint& current, const ReviewReport& report);

// Picks that together cover every diff entry.
std::set<Pick> picks_covering(const std::vector<blueprint::SceneDiff>& diffs);

} // namespace pedaco::review
