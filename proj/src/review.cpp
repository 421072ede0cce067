#include "pedaco/review.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "text_util.hpp"

namespace pedaco::review {

using blueprint::DiffKind;
using blueprint::Field;
using blueprint::Scene;
using blueprint::ScriptBlueprint;

namespace {

constexpr std::array<std::string_view, 3> kSections = {kDetailedResults, kSuggestions, kRevisedScript};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Matches a section header at line start, tolerating "#", bold markers and
// a trailing colon. Returns the text following the header on the same line.
std::optional<std::string_view> match_section(std::string_view line, std::string_view name) {
    std::string_view s = text::trim(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_' || text::is_space(s.front()))) {
        s.remove_prefix(1);
    }
    if (!text::istarts_with(s, name)) return std::nullopt;
    s.remove_prefix(name.size());
    while (!s.empty() && (s.front() == '*' || s.front() == '_' || s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    if (s.empty()) return s;
    if (s.front() != ':') return std::nullopt;
    s.remove_prefix(1);
    while (!s.empty() && (s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
    return text::trim(s);
}

// "- x", "* x", "• x", "+ x", "3. x", "3) x" -> "x".
std::optional<std::string_view> strip_enumerator(std::string_view t) {
    if (t.size() >= 2 && (t[0] == '-' || t[0] == '*' || t[0] == '+') && text::is_space(t[1])) {
        return text::trim(t.substr(2));
    }
    if (text::starts_with(t, "\xE2\x80\xA2")) return text::trim(t.substr(3));
    std::size_t i = 0;
    while (i < t.size() && is_digit(t[i])) ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')') && (i + 1 == t.size() || text::is_space(t[i + 1]))) {
        return text::trim(t.substr(i + 1));
    }
    return std::nullopt;
}

std::vector<Suggestion> parse_suggestions(const std::vector<std::string_view>& lines) {
    std::vector<std::string> items;
    bool open = false;
    for (std::string_view raw : lines) {
        std::string_view t = text::trim(raw);
        if (t.empty()) continue;
        if (auto body = strip_enumerator(t)) {
            items.emplace_back(*body);
            open = true;
        } else if (open) {
            auto& item = items.back();
            item += item.empty() ? "" : "\n";
            item += t;
        } else {
            items.emplace_back(t);
            open = true;
        }
    }
    std::vector<Suggestion> out;
    for (auto& item : items) {
        if (text::trim(item).empty()) continue;
        Suggestion s;
        s.ordinal = static_cast<int>(out.size()) + 1;
        s.text = std::move(item);
        s.scene_refs = extract_scene_refs(s.text);
        out.push_back(std::move(s));
    }
    return out;
}

std::string joined(const std::vector<std::string_view>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

int max_index(const ScriptBlueprint& bp) {
    int last = 0;
    for (const auto& s : bp.scenes) last = std::max(last, s.index);
    return last;
}

} // namespace

std::string_view to_string(ReviewErrc code) {
    switch (code) {
    case ReviewErrc::missing_section: return "missing_section";
    case ReviewErrc::revised_script_unparseable: return "revised_script_unparseable";
    case ReviewErrc::unknown_scene_ref: return "unknown_scene_ref";
    case ReviewErrc::unknown_field: return "unknown_field";
    }
    return "missing_section";
}

ReviewError::ReviewError(ReviewErrc kind, const std::string& message, nlohmann::json detail)
    : Error(std::string(to_string(kind)), message, std::move(detail)), kind_(kind) {}

std::set<int> extract_scene_refs(std::string_view s) {
    std::set<int> refs;
    auto read_number = [&](std::size_t& i) -> std::optional<int> {
        std::size_t start = i;
        while (i < s.size() && is_digit(s[i]) && i - start < 6) ++i;
        if (i == start) return std::nullopt;
        return std::stoi(std::string(s.substr(start, i - start)));
    };
    auto skip_spaces = [&](std::size_t& i) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    };

    for (std::size_t pos = 0; pos + 5 <= s.size(); ++pos) {
        if (!text::istarts_with(s.substr(pos), "scene")) continue;
        if (pos > 0 && is_alnum(s[pos - 1])) continue;
        std::size_t i = pos + 5;
        if (i < s.size() && (s[i] == 's' || s[i] == 'S')) ++i;
        skip_spaces(i);
        if (i < s.size() && s[i] == '#') ++i;
        auto first = read_number(i);
        if (!first) continue;
        refs.insert(*first);
        int previous = *first;
        // Lists and ranges: "Scenes 2, 3 and 5", "Scene 1-2".
        while (true) {
            std::size_t j = i;
            skip_spaces(j);
            bool range = false;
            if (j < s.size() && (s[j] == ',' || s[j] == '&' || s[j] == '/')) {
                ++j;
            } else if (j < s.size() && s[j] == '-') {
                ++j;
                range = true;
            } else if (text::istarts_with(s.substr(j), "and ")) {
                j += 4;
            } else {
                break;
            }
            skip_spaces(j);
            auto next = read_number(j);
            if (!next) break;
            if (range && *next > previous && *next - previous <= 50) {
                for (int k = previous + 1; k <= *next; ++k) refs.insert(k);
            } else {
                refs.insert(*next);
            }
            previous = *next;
            i = j;
        }
        pos = i - 1;
    }
    refs.erase(0);
    return refs;
}

ReviewReport parse_review(std::string_view input) {
    const auto lines = text::split_lines(input);
    std::array<std::vector<std::string_view>, 3> bodies;
    std::size_t found = 0;
    int current = -1;

    for (std::string_view line : lines) {
        if (found < kSections.size()) {
            if (auto rest = match_section(line, kSections[found])) {
                current = static_cast<int>(found++);
                if (!rest->empty()) bodies[current].push_back(*rest);
                continue;
            }
        }
        if (current >= 0) bodies[current].push_back(line);
    }
    if (found < kSections.size()) {
        const std::string name(kSections[found]);
        throw ReviewError(ReviewErrc::missing_section, "reviewer response has no '" + name + "' section",
                          {{"section", name}});
    }

    ReviewReport report;
    report.detailed_results = std::string(text::trim(joined(bodies[0])));
    report.suggestions = parse_suggestions(bodies[1]);
    try {
        report.revised_script = blueprint::parse_blueprint(joined(bodies[2]));
    } catch (const blueprint::BlueprintError& e) {
        throw ReviewError(ReviewErrc::revised_script_unparseable, std::string("revised script: ") + e.what(),
                          {{"cause", e.code()}});
    }
    return report;
}

std::string render_review(const ReviewReport& report) {
    std::string out = std::string(kDetailedResults) + ":\n";
    if (!report.detailed_results.empty()) out += report.detailed_results + "\n";
    out += "\n" + std::string(kSuggestions) + ":\n";
    for (const auto& s : report.suggestions) {
        const auto lines = text::split_lines(s.text);
        out += std::to_string(s.ordinal) + ". " + std::string(lines.front()) + "\n";
        for (std::size_t i = 1; i < lines.size(); ++i) out += "   " + std::string(lines[i]) + "\n";
    }
    out += "\n" + std::string(kRevisedScript) + ":\n";
    out += blueprint::serialize_blueprint(report.revised_script);
    return out;
}

int anchor_suggestions(ReviewReport& report, const ScriptBlueprint& reviewed) {
    int removed = 0;
    for (auto& s : report.suggestions) {
        for (auto it = s.scene_refs.begin(); it != s.scene_refs.end();) {
            if (reviewed.find(*it) || report.revised_script.find(*it)) {
                ++it;
            } else {
                it = s.scene_refs.erase(it);
                ++removed;
            }
        }
    }
    return removed;
}

ScriptBlueprint apply_all(const ScriptBlueprint& current, const ReviewReport& report) {
    ScriptBlueprint next = blueprint::normalize_indices(report.revised_script);
    next.revision_id = current.revision_id + 1;
    next.topic_label = current.topic_label;
    return next;
}

std::string_view to_string(PickTarget target) {
    switch (target) {
    case PickTarget::visual_description: return "visual_description";
    case PickTarget::narration: return "narration";
    case PickTarget::scene: return "scene";
    }
    return "scene";
}

std::optional<PickTarget> pick_target_from_string(std::string_view name) {
    if (name == "visual_description") return PickTarget::visual_description;
    if (name == "narration") return PickTarget::narration;
    if (name == "scene") return PickTarget::scene;
    return std::nullopt;
}

ScriptBlueprint apply_selective(const ScriptBlueprint& current, const ReviewReport& report,
                                const std::set<Pick>& picks) {
    const ScriptBlueprint base = blueprint::normalize_indices(current);
    const ScriptBlueprint revised = blueprint::normalize_indices(report.revised_script);

    for (const Pick& pick : picks) {
        const bool in_base = base.find(pick.scene_index) != nullptr;
        const bool in_revised = revised.find(pick.scene_index) != nullptr;
        if (!in_base && !in_revised) {
            throw ReviewError(ReviewErrc::unknown_scene_ref,
                              "scene " + std::to_string(pick.scene_index) + " is in neither script",
                              {{"scene_index", pick.scene_index}});
        }
        if (pick.target != PickTarget::scene && !(in_base && in_revised)) {
            throw ReviewError(ReviewErrc::unknown_field,
                              "scene " + std::to_string(pick.scene_index) + " exists in only one script; pick '" +
                                  std::string(to_string(PickTarget::scene)) + "' instead of '" +
                                  std::string(to_string(pick.target)) + "'",
                              {{"scene_index", pick.scene_index}, {"field", std::string(to_string(pick.target))}});
        }
    }
    auto picked = [&](int index, PickTarget target) { return picks.count(Pick{index, target}) > 0; };

    ScriptBlueprint next;
    const int last = std::max(max_index(base), max_index(revised));
    for (int i = 1; i <= last; ++i) {
        const Scene* before = base.find(i);
        const Scene* after = revised.find(i);
        if (before && after) {
            Scene scene = *before;
            if (picked(i, PickTarget::scene)) {
                scene = *after;
            } else {
                if (picked(i, PickTarget::visual_description)) scene.visual_description = after->visual_description;
                if (picked(i, PickTarget::narration)) scene.narration = after->narration;
            }
            next.scenes.push_back(std::move(scene));
        } else if (before) {
            if (!picked(i, PickTarget::scene)) next.scenes.push_back(*before);
        } else if (after) {
            if (picked(i, PickTarget::scene)) next.scenes.push_back(*after);
        }
    }
    next = blueprint::normalize_indices(std::move(next));
    next.revision_id = current.revision_id + 1;
    next.topic_label = current.topic_label;
    return next;
}

std::vector<blueprint::SceneDiff> review_delta(const ScriptBlueprint& current, const ReviewReport& report) {
    return blueprint::diff_blueprints(current, report.revised_script);
}

std::set<Pick> picks_covering(const std::vector<blueprint::SceneDiff>& diffs) {
    std::set<Pick> picks;
    for (const auto& d : diffs) {
        if (d.kind != DiffKind::modified) {
            picks.insert({d.scene_index, PickTarget::scene});
            continue;
        }
        for (Field f : d.changed_fields) {
            picks.insert({d.scene_index, f == Field::visual_description ? PickTarget::visual_description
                                                                        : PickTarget::narration});
        }
    }
    return picks;
}

} // namespace pedaco::review
