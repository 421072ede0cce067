#include "pedaco/json_forms.hpp"

namespace pedaco {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error("invalid_json", what); }

const json& require(const json& j, const char* key) {
    if (!j.is_object()) bad(std::string("expected an object holding '") + key + "'");
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing '") + key + "'");
    return *it;
}

std::string get_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

int get_int(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
    return v.get<int>();
}

double get_number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

const json& get_array(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_array()) bad(std::string("'") + key + "' must be an array");
    return v;
}

std::vector<std::string> string_list(const json& v, const char* key) {
    if (!v.is_array()) bad(std::string("'") + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) bad(std::string("'") + key + "' must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) bad(std::string("'") + key + "' must be a string or null");
    return it->get<std::string>();
}

} // namespace

namespace blueprint {

void to_json(json& j, const Scene& s) {
    j = json{{"index", s.index}, {"visual_description", s.visual_description}, {"narration", s.narration}};
}

void from_json(const json& j, Scene& s) {
    s.index = get_int(j, "index");
    s.visual_description = get_string(j, "visual_description");
    s.narration = get_string(j, "narration");
}

void to_json(json& j, const ScriptBlueprint& bp) {
    j = json{{"scenes", bp.scenes}, {"revision_id", bp.revision_id}};
    if (bp.topic_label) j["topic_label"] = *bp.topic_label;
}

void from_json(const json& j, ScriptBlueprint& bp) {
    bp.scenes.clear();
    for (const auto& s : get_array(j, "scenes")) bp.scenes.push_back(s.get<Scene>());
    bp.revision_id = j.contains("revision_id") ? get_int(j, "revision_id") : 0;
    bp.topic_label = optional_string(j, "topic_label");
}

void to_json(json& j, const SceneDiff& d) {
    json fields = json::array();
    for (Field f : d.changed_fields) fields.push_back(std::string(to_string(f)));
    j = json{{"scene_index", d.scene_index}, {"kind", std::string(to_string(d.kind))}, {"changed_fields", fields}};
    j["before"] = d.before ? json(*d.before) : json(nullptr);
    j["after"] = d.after ? json(*d.after) : json(nullptr);
}

} // namespace blueprint

namespace prompt {

void to_json(json& j, const DirectiveGroup& g) {
    j = json{{"title", g.title}, {"directives", g.directives}, {"enabled", g.enabled}};
}

void from_json(const json& j, DirectiveGroup& g) {
    g.title = get_string(j, "title");
    g.directives = string_list(require(j, "directives"), "directives");
    g.enabled = true;
    if (auto it = j.find("enabled"); it != j.end()) {
        if (!it->is_boolean()) bad("'enabled' must be a boolean");
        g.enabled = it->get<bool>();
    }
}

void to_json(json& j, const PromptConfig& c) {
    j = json{{"mode", std::string(to_string(c.mode))},
             {"preamble", c.preamble},
             {"groups", c.groups},
             {"constraints", c.constraints},
             {"custom_instructions", c.custom_instructions ? json(*c.custom_instructions) : json(nullptr)},
             {"output_format", c.output_format},
             {"max_scenes", c.max_scenes ? json(*c.max_scenes) : json(nullptr)}};
}

PromptConfig prompt_config_from_json(const json& j, Mode mode) {
    if (!j.is_object()) bad("prompt config must be an object");
    if (auto it = j.find("mode"); it != j.end()) {
        if (!it->is_string() || !mode_from_string(it->get<std::string>())) bad("'mode' must be generation or review");
        mode = *mode_from_string(it->get<std::string>());
    }
    PromptConfig c = mode == Mode::generation ? default_generation_config() : default_review_config();
    if (j.contains("preamble")) c.preamble = get_string(j, "preamble");
    if (j.contains("groups")) {
        c.groups.clear();
        for (const auto& g : get_array(j, "groups")) c.groups.push_back(g.get<DirectiveGroup>());
    }
    if (j.contains("constraints")) c.constraints = string_list(j["constraints"], "constraints");
    if (j.contains("custom_instructions")) c.custom_instructions = optional_string(j, "custom_instructions");
    if (j.contains("output_format")) c.output_format = get_string(j, "output_format");
    if (auto it = j.find("max_scenes"); it != j.end()) {
        if (it->is_null()) {
            c.max_scenes.reset();
        } else if (it->is_number_integer() && it->get<int>() >= 1) {
            c.max_scenes = it->get<int>();
        } else {
            bad("'max_scenes' must be a positive integer or null");
        }
    }
    return c;
}

void from_json(const json& j, PromptConfig& c) { c = prompt_config_from_json(j, Mode::generation); }

void to_json(json& j, const Principle& p) {
    j = json{{"id", p.id},
             {"name", p.name},
             {"category", std::string(to_string(p.category))},
             {"guideline", p.guideline},
             {"rationale", p.rationale}};
}

} // namespace prompt

namespace review {

void to_json(json& j, const Suggestion& s) {
    j = json{{"ordinal", s.ordinal}, {"scene_refs", s.scene_refs}, {"text", s.text}};
}

void from_json(const json& j, Suggestion& s) {
    s.ordinal = get_int(j, "ordinal");
    s.text = get_string(j, "text");
    s.scene_refs.clear();
    for (const auto& r : get_array(j, "scene_refs")) {
        if (!r.is_number_integer()) bad("'scene_refs' must hold integers");
        s.scene_refs.insert(r.get<int>());
    }
}

void to_json(json& j, const ReviewReport& r) {
    j = json{{"detailed_results", r.detailed_results},
             {"suggestions", r.suggestions},
             {"revised_script", r.revised_script},
             {"iteration", r.iteration}};
}

void from_json(const json& j, ReviewReport& r) {
    r.detailed_results = get_string(j, "detailed_results");
    r.suggestions.clear();
    for (const auto& s : get_array(j, "suggestions")) r.suggestions.push_back(s.get<Suggestion>());
    r.revised_script = require(j, "revised_script").get<blueprint::ScriptBlueprint>();
    r.iteration = get_int(j, "iteration");
}

void to_json(json& j, const Pick& p) {
    j = json{{"scene_index", p.scene_index}, {"field", std::string(to_string(p.target))}};
}

void from_json(const json& j, Pick& p) {
    p.scene_index = get_int(j, "scene_index");
    const std::string field = get_string(j, "field");
    auto target = pick_target_from_string(field);
    if (!target) {
        throw ReviewError(ReviewErrc::unknown_field,
                          "unknown field '" + field + "'; expected visual_description, narration or scene",
                          {{"field", field}});
    }
    p.target = *target;
}

} // namespace review

namespace gateway {

void to_json(json& j, const Clip& c) {
    j = json{{"scene_index", c.scene_index}, {"clip_ref", c.clip_ref}, {"duration_s", c.duration_s}};
}

void from_json(const json& j, Clip& c) {
    c.scene_index = get_int(j, "scene_index");
    c.clip_ref = get_string(j, "clip_ref");
    c.duration_s = get_number(j, "duration_s");
}

void to_json(json& j, const RenderManifest& m) {
    j = json{{"clips", m.clips},
             {"total_duration_s", m.total_duration_s},
             {"settings", {{"per_scene_duration_s", m.settings.per_scene_duration_s}}}};
}

void from_json(const json& j, RenderManifest& m) {
    m.clips.clear();
    for (const auto& c : get_array(j, "clips")) m.clips.push_back(c.get<Clip>());
    m.total_duration_s = get_number(j, "total_duration_s");
    m.settings.per_scene_duration_s = get_number(require(j, "settings"), "per_scene_duration_s");
}

} // namespace gateway

} // namespace pedaco
