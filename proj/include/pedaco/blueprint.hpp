#pragma once

// Scene-script intermediate representation and its text grammar:
//
//   <Scene 1>
//   Visual Description: ...
//   Clear Narration: ...
//
//   <Scene 2>
//   ...
//
// Parsing is tolerant (markdown residue, header whitespace, label case,
// gapped indices); serialization always emits the canonical form above.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/error.hpp"

namespace pedaco::blueprint {

enum class Field { visual_description, narration };

std::string_view to_string(Field field);
std::optional<Field> field_from_string(std::string_view name);

struct Scene {
    int index = 0;
    std::string visual_description;
    std::string narration;

    const std::string& get(Field field) const;
    std::string& get(Field field);

    bool operator==(const Scene&) const = default;
};

struct ScriptBlueprint {
    std::vector<Scene> scenes;
    int revision_id = 0;
    std::optional<std::string> topic_label;

    bool empty() const noexcept { return scenes.empty(); }
    const Scene* find(int index) const;
    // Scene equality only; revision_id and topic_label are ignored.
    bool same_content(const ScriptBlueprint& other) const { return scenes == other.scenes; }

    bool operator==(const ScriptBlueprint&) const = default;
};

enum class DiffKind { added, removed, modified };

std::string_view to_string(DiffKind kind);

struct SceneDiff {
    int scene_index = 0;
    DiffKind kind = DiffKind::modified;
    std::vector<Field> changed_fields;
    std::optional<Scene> before;
    std::optional<Scene> after;

    bool operator==(const SceneDiff&) const = default;
};

enum class BlueprintErrc {
    missing_header,
    missing_field,
    duplicate_index,
    empty_field,
    header_not_integer,
    invariant_violation,
};

std::string_view to_string(BlueprintErrc code);

class BlueprintError : public Error {
public:
    BlueprintError(BlueprintErrc kind, const std::string& message, int line = 0);

    BlueprintErrc kind() const noexcept { return kind_; }
    // 1-based line of the offending input, 0 when not tied to a line.
    int line() const noexcept { return line_; }

private:
    BlueprintErrc kind_;
    int line_;
};

struct ParseOutcome {
    ScriptBlueprint blueprint;
    // Recoverable oddities: discarded preamble, renumbered scenes.
    std::vector<std::string> warnings;
};

ParseOutcome parse_blueprint_detailed(std::string_view text);
ScriptBlueprint parse_blueprint(std::string_view text);

// Throws BlueprintError(invariant_violation) when the blueprint could not
// round-trip through the grammar.
void validate_blueprint(const ScriptBlueprint& bp);
std::string serialize_blueprint(const ScriptBlueprint& bp);

// Canonical form of a script text: serialize(parse(text)).
std::string normalize_script_text(std::string_view text);

ScriptBlueprint normalize_indices(ScriptBlueprint bp);

// Position-wise comparison by scene index. Both inputs are expected to be
// normalized.
std::vector<SceneDiff> diff_blueprints(const ScriptBlueprint& a, const ScriptBlueprint& b);

} // namespace pedaco::blueprint
