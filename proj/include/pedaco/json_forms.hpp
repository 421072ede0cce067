#pragma once

// JSON wire forms shared by project files, the HTTP API and the CLI.
// Decoding throws pedaco::Error("invalid_json") on shape problems.

#include <json.hpp>

#include "pedaco/blueprint.hpp"
#include "pedaco/gateway.hpp"
#include "pedaco/prompt.hpp"
#include "pedaco/review.hpp"

namespace pedaco::blueprint {
void to_json(nlohmann::json& j, const Scene& s);
void from_json(const nlohmann::json& j, Scene& s);
void to_json(nlohmann::json& j, const ScriptBlueprint& bp);
void from_json(const nlohmann::json& j, ScriptBlueprint& bp);
void to_json(nlohmann::json& j, const SceneDiff& d);
} // namespace pedaco::blueprint

namespace pedaco::prompt {
void to_json(nlohmann::json& j, const DirectiveGroup& g);
void from_json(const nlohmann::json& j, DirectiveGroup& g);
void to_json(nlohmann::json& j, const PromptConfig& c);
void from_json(const nlohmann::json& j, PromptConfig& c);
void to_json(nlohmann::json& j, const Principle& p);

// Missing keys fall back to the default config for `mode` (or for the
// document's own "mode" when present).
PromptConfig prompt_config_from_json(const nlohmann::json& j, Mode mode);
} // namespace pedaco::prompt

namespace pedaco::review {
void to_json(nlohmann::json& j, const Suggestion& s);
void from_json(const nlohmann::json& j, Suggestion& s);
void to_json(nlohmann::json& j, const ReviewReport& r);
void from_json(const nlohmann::json& j, ReviewReport& r);
void to_json(nlohmann::json& j, const Pick& p);
void from_json(const nlohmann::json& j, Pick& p);
} // namespace pedaco::review

namespace pedaco::gateway {
void to_json(nlohmann::json& j, const Clip& c);
void from_json(const nlohmann::json& j, Clip& c);
void to_json(nlohmann::json& j, const RenderManifest& m);
void from_json(const nlohmann::json& j, RenderManifest& m);
} // namespace pedaco::gateway
