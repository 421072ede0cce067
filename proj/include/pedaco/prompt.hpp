#pragma once

// Multimedia-learning principle registry and deterministic prompt assembly
// for script generation and script review.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/blueprint.hpp"
#include "pedaco/error.hpp"

namespace pedaco::prompt {

enum class Category { reduce_extraneous, manage_essential, foster_generative };

std::string_view to_string(Category category);

struct Principle {
    std::string id;
    std::string name;
    Category category;
    std::string guideline;
    std::string rationale;
};

// The twelve built-in principles, grouped by category in registry order.
const std::vector<Principle>& principle_registry();
const Principle* find_principle(std::string_view id);

enum class Mode { generation, review };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view name);

struct DirectiveGroup {
    std::string title;
    std::vector<std::string> directives;
    bool enabled = true;

    bool operator==(const DirectiveGroup&) const = default;
};

struct PromptConfig {
    Mode mode = Mode::generation;
    // Persona text placed before the criteria (review mode default).
    std::string preamble;
    std::vector<DirectiveGroup> groups;
    std::vector<std::string> constraints;
    std::optional<std::string> custom_instructions;
    std::string output_format;
    // Rewrites the "Maximum scene count:" constraint when set.
    std::optional<int> max_scenes;

    bool operator==(const PromptConfig&) const = default;
};

PromptConfig default_generation_config();
PromptConfig default_review_config();

enum class PromptErrc { empty_content, empty_blueprint, invalid_config };

std::string_view to_string(PromptErrc code);

class PromptError : public Error {
public:
    PromptError(PromptErrc kind, const std::string& message);
    PromptErrc kind() const noexcept { return kind_; }

private:
    PromptErrc kind_;
};

inline constexpr std::string_view kLearningContentHeader = "[Learning Content]";
inline constexpr std::string_view kScriptHeader = "[Video Generation Script]";
inline constexpr std::string_view kOutputFormatHeader = "[Output Format]";
inline constexpr std::string_view kMaxSceneCountPrefix = "Maximum scene count:";

// Constraint list after the max_scenes override is applied.
std::vector<std::string> effective_constraints(const PromptConfig& config);

std::string assemble_generation_prompt(const PromptConfig& config, std::string_view content);

// `extra` is appended as its own block at the end of the review criteria.
std::string assemble_review_prompt(const PromptConfig& config, std::string_view content,
                                   const blueprint::ScriptBlueprint& bp,
                                   std::optional<std::string_view> extra = std::nullopt);

} // namespace pedaco::prompt
