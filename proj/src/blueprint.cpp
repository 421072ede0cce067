#include "pedaco/blueprint.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>

#include "text_util.hpp"

namespace pedaco::blueprint {

namespace {

constexpr std::string_view kVisualLabel = "Visual Description";
constexpr std::string_view kNarrationLabel = "Clear Narration";
constexpr std::array<Field, 2> kFields = {Field::visual_description, Field::narration};

std::string_view label_of(Field f) {
    return f == Field::visual_description ? kVisualLabel : kNarrationLabel;
}

enum class LineKind { blank, content, header, label, residue };

struct LineInfo {
    LineKind kind = LineKind::content;
    std::string_view header_token;
    std::string_view header_tail;
    Field field = Field::visual_description;
    std::string_view value;
};

bool is_markup(char c) { return c == '*' || c == '_'; }

// Code fences and thematic breaks carry no content.
bool is_residue(std::string_view t) {
    if (text::starts_with(t, "```")) return true;
    char mark = 0;
    int count = 0;
    for (char c : t) {
        if (c == ' ' || c == '\t') continue;
        if (c != '-' && c != '*' && c != '_') return false;
        if (mark && c != mark) return false;
        mark = c;
        ++count;
    }
    return count >= 3;
}

std::string_view strip_markup_and_space(std::string_view s) {
    while (!s.empty() && (is_markup(s.front()) || text::is_space(s.front()))) s.remove_prefix(1);
    while (!s.empty() && (is_markup(s.back()) || text::is_space(s.back()))) s.remove_suffix(1);
    return s;
}

LineInfo classify(std::string_view line) {
    LineInfo info;
    std::string_view t = text::trim(line);
    if (t.empty()) {
        info.kind = LineKind::blank;
        return info;
    }
    if (is_residue(t)) {
        info.kind = LineKind::residue;
        return info;
    }

    std::size_t i = 0;
    std::size_t markup = 0;
    while (i < t.size() && (is_markup(t[i]) || t[i] == '#' || t[i] == '-' || text::is_space(t[i]))) {
        if (is_markup(t[i])) ++markup;
        ++i;
    }
    std::string_view s = t.substr(i);

    if (!s.empty() && s.front() == '<') {
        std::size_t j = 1;
        while (j < s.size() && text::is_space(s[j])) ++j;
        if (text::istarts_with(s.substr(j), "scene")) {
            j += 5;
            const bool boundary = j >= s.size() || text::is_space(s[j]) || s[j] == '>' ||
                                  std::isdigit(static_cast<unsigned char>(s[j]));
            std::size_t close = s.find('>', j);
            if (boundary && close != std::string_view::npos) {
                info.kind = LineKind::header;
                info.header_token = text::trim(s.substr(j, close - j));
                info.header_tail = strip_markup_and_space(s.substr(close + 1));
                return info;
            }
        }
    }

    for (Field f : kFields) {
        std::string_view name = label_of(f);
        if (!text::istarts_with(s, name)) continue;
        std::size_t k = name.size();
        while (k < s.size() && (is_markup(s[k]) || s[k] == ' ' || s[k] == '\t')) ++k;
        if (k >= s.size() || s[k] != ':') continue;
        ++k;
        std::size_t stripped = 0;
        while (k < s.size() && stripped < markup && is_markup(s[k])) {
            ++k;
            ++stripped;
        }
        info.kind = LineKind::label;
        info.field = f;
        info.value = s.substr(k);
        return info;
    }
    return info;
}

struct PendingScene {
    int index = 0;
    int header_line = 0;
    std::array<std::optional<std::string>, 2> fields;
    std::optional<Field> current;
};

std::size_t slot(Field f) { return f == Field::visual_description ? 0 : 1; }

Scene finish_scene(PendingScene& pending) {
    Scene scene;
    scene.index = pending.index;
    for (Field f : kFields) {
        auto& value = pending.fields[slot(f)];
        if (!value) {
            throw BlueprintError(BlueprintErrc::missing_field,
                                 "scene " + std::to_string(pending.index) + " has no '" +
                                     std::string(label_of(f)) + ":' label",
                                 pending.header_line);
        }
        std::string_view trimmed = text::trim(*value);
        if (trimmed.empty()) {
            throw BlueprintError(BlueprintErrc::empty_field,
                                 "scene " + std::to_string(pending.index) + " has an empty '" +
                                     std::string(label_of(f)) + "'",
                                 pending.header_line);
        }
        scene.get(f) = std::string(trimmed);
    }
    return scene;
}

int parse_header_index(std::string_view token, int line) {
    int value = 0;
    if (text::all_digits(token)) {
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec == std::errc() && ptr == token.data() + token.size() && value >= 1) return value;
    }
    throw BlueprintError(BlueprintErrc::header_not_integer,
                         "scene header '<Scene " + std::string(token) + ">' does not carry a positive integer",
                         line);
}

} // namespace

std::string_view to_string(Field field) {
    return field == Field::visual_description ? "visual_description" : "narration";
}

std::optional<Field> field_from_string(std::string_view name) {
    if (name == "visual_description") return Field::visual_description;
    if (name == "narration") return Field::narration;
    return std::nullopt;
}

std::string_view to_string(DiffKind kind) {
    switch (kind) {
    case DiffKind::added: return "added";
    case DiffKind::removed: return "removed";
    case DiffKind::modified: return "modified";
    }
    return "modified";
}

std::string_view to_string(BlueprintErrc code) {
    switch (code) {
    case BlueprintErrc::missing_header: return "missing_header";
    case BlueprintErrc::missing_field: return "missing_field";
    case BlueprintErrc::duplicate_index: return "duplicate_index";
    case BlueprintErrc::empty_field: return "empty_field";
    case BlueprintErrc::header_not_integer: return "header_not_integer";
    case BlueprintErrc::invariant_violation: return "invariant_violation";
    }
    return "invariant_violation";
}

BlueprintError::BlueprintError(BlueprintErrc kind, const std::string& message, int line)
    : Error(std::string(to_string(kind)), line > 0 ? "line " + std::to_string(line) + ": " + message : message,
            line > 0 ? nlohmann::json{{"line", line}} : nlohmann::json::object()),
      kind_(kind),
      line_(line) {}

const std::string& Scene::get(Field field) const {
    return field == Field::visual_description ? visual_description : narration;
}

std::string& Scene::get(Field field) {
    return field == Field::visual_description ? visual_description : narration;
}

const Scene* ScriptBlueprint::find(int index) const {
    auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.index == index; });
    return it == scenes.end() ? nullptr : &*it;
}

ParseOutcome parse_blueprint_detailed(std::string_view input) {
    if (text::starts_with(input, "\xEF\xBB\xBF")) input.remove_prefix(3);

    ParseOutcome outcome;
    std::vector<Scene> scenes;
    std::set<int> seen;
    std::optional<PendingScene> pending;
    std::string preamble;

    const auto lines = text::split_lines(input);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const int lineno = static_cast<int>(n) + 1;
        const std::string_view line = lines[n];
        const LineInfo info = classify(line);

        switch (info.kind) {
        case LineKind::residue:
            break;
        case LineKind::blank:
            if (pending && pending->current) {
                auto& value = *pending->fields[slot(*pending->current)];
                value += "\n";
                value += line;
            }
            break;
        case LineKind::header: {
            if (pending) scenes.push_back(finish_scene(*pending));
            const int index = parse_header_index(info.header_token, lineno);
            if (!info.header_tail.empty()) {
                throw BlueprintError(BlueprintErrc::missing_field,
                                     "unlabeled text after the header of scene " + std::to_string(index), lineno);
            }
            if (!seen.insert(index).second) {
                throw BlueprintError(BlueprintErrc::duplicate_index,
                                     "scene " + std::to_string(index) + " appears more than once", lineno);
            }
            pending = PendingScene{index, lineno, {}, std::nullopt};
            break;
        }
        case LineKind::label: {
            if (!pending) {
                throw BlueprintError(BlueprintErrc::missing_header,
                                     "'" + std::string(label_of(info.field)) + ":' appears before any scene header",
                                     lineno);
            }
            auto& value = pending->fields[slot(info.field)];
            if (value) {
                throw BlueprintError(BlueprintErrc::missing_header,
                                     "second '" + std::string(label_of(info.field)) +
                                         ":' label without a new scene header",
                                     lineno);
            }
            value = std::string(info.value);
            pending->current = info.field;
            break;
        }
        case LineKind::content:
            if (!pending) {
                preamble += line;
                preamble += '\n';
            } else if (!pending->current) {
                throw BlueprintError(BlueprintErrc::missing_field,
                                     "text in scene " + std::to_string(pending->index) + " before any field label",
                                     lineno);
            } else {
                auto& value = *pending->fields[slot(*pending->current)];
                value += "\n";
                value += line;
            }
            break;
        }
    }
    if (pending) scenes.push_back(finish_scene(*pending));
    if (scenes.empty()) throw BlueprintError(BlueprintErrc::missing_header, "no '<Scene N>' header found");

    if (std::string_view pre = text::trim(preamble); !pre.empty()) {
        outcome.warnings.push_back("ignored text before the first scene header: \"" + std::string(pre) + "\"");
    }

    bool canonical = true;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (scenes[i].index != static_cast<int>(i) + 1) canonical = false;
    }
    outcome.blueprint.scenes = std::move(scenes);
    if (!canonical) {
        std::string original;
        for (const auto& s : outcome.blueprint.scenes) {
            original += (original.empty() ? "" : ",") + std::to_string(s.index);
        }
        outcome.warnings.push_back("scene indices {" + original + "} renumbered to 1.." +
                                   std::to_string(outcome.blueprint.scenes.size()));
        outcome.blueprint = normalize_indices(std::move(outcome.blueprint));
    }
    return outcome;
}

ScriptBlueprint parse_blueprint(std::string_view text) {
    return parse_blueprint_detailed(text).blueprint;
}

void validate_blueprint(const ScriptBlueprint& bp) {
    for (std::size_t i = 0; i < bp.scenes.size(); ++i) {
        const Scene& scene = bp.scenes[i];
        if (scene.index != static_cast<int>(i) + 1) {
            throw BlueprintError(BlueprintErrc::invariant_violation,
                                 "scene indices must be exactly 1..N in order; position " + std::to_string(i + 1) +
                                     " holds index " + std::to_string(scene.index));
        }
        for (Field f : kFields) {
            const std::string& value = scene.get(f);
            const std::string where = "scene " + std::to_string(scene.index) + " " + std::string(to_string(f));
            if (value.empty() || text::trim(value) != value) {
                throw BlueprintError(BlueprintErrc::invariant_violation,
                                     where + " must be nonempty without surrounding whitespace");
            }
            if (value.find('\r') != std::string::npos) {
                throw BlueprintError(BlueprintErrc::invariant_violation, where + " contains a carriage return");
            }
            const auto lines = text::split_lines(value);
            for (std::size_t k = 1; k < lines.size(); ++k) {
                const LineKind kind = classify(lines[k]).kind;
                if (kind != LineKind::content && kind != LineKind::blank) {
                    throw BlueprintError(BlueprintErrc::invariant_violation,
                                         where + " contains a line that reads as a header, label or markup rule");
                }
            }
        }
    }
}

std::string serialize_blueprint(const ScriptBlueprint& bp) {
    validate_blueprint(bp);
    std::string out;
    for (const Scene& scene : bp.scenes) {
        if (!out.empty()) out += '\n';
        out += "<Scene " + std::to_string(scene.index) + ">\n";
        out += std::string(kVisualLabel) + ": " + scene.visual_description + "\n";
        out += std::string(kNarrationLabel) + ": " + scene.narration + "\n";
    }
    return out;
}

std::string normalize_script_text(std::string_view text) {
    return serialize_blueprint(parse_blueprint(text));
}

ScriptBlueprint normalize_indices(ScriptBlueprint bp) {
    for (std::size_t i = 0; i < bp.scenes.size(); ++i) bp.scenes[i].index = static_cast<int>(i) + 1;
    return bp;
}

std::vector<SceneDiff> diff_blueprints(const ScriptBlueprint& a, const ScriptBlueprint& b) {
    std::vector<SceneDiff> diffs;
    int last = 0;
    for (const auto& s : a.scenes) last = std::max(last, s.index);
    for (const auto& s : b.scenes) last = std::max(last, s.index);

    for (int i = 1; i <= last; ++i) {
        const Scene* before = a.find(i);
        const Scene* after = b.find(i);
        if (before && after) {
            SceneDiff d{i, DiffKind::modified, {}, *before, *after};
            for (Field f : kFields) {
                if (before->get(f) != after->get(f)) d.changed_fields.push_back(f);
            }
            if (!d.changed_fields.empty()) diffs.push_back(std::move(d));
        } else if (after) {
            diffs.push_back(SceneDiff{i, DiffKind::added, {}, std::nullopt, *after});
        } else if (before) {
            diffs.push_back(SceneDiff{i, DiffKind::removed, {}, *before, std::nullopt});
        }
    }
    return diffs;
}

} // namespace pedaco::blueprint
