#include "pedaco/eval/records.hpp"

#include <set>
#include <tuple>

#include "text_util.hpp"

namespace pedaco::eval {

std::string_view to_string(Condition c) { return c == Condition::baseline ? "baseline" : "pedacogen"; }

std::optional<Condition> condition_from_string(std::string_view s) {
    if (text::iequals(s, "baseline")) return Condition::baseline;
    if (text::iequals(s, "pedacogen")) return Condition::pedacogen;
    return std::nullopt;
}

std::string_view item_label(int item) {
    static constexpr std::array<std::string_view, kItemCount> labels = {
        "Multimedia",  "Coherence", "Signaling",       "Redundancy", "Spatial Contiguity",
        "Temporal Contiguity", "Segmenting", "Pre-training", "Modality",   "Personalization",
        "Voice",       "Image",     "Overall Validity",
    };
    if (item < 1 || item > kItemCount) return "unknown";
    return labels[item - 1];
}

std::string_view topic_label(int topic) {
    switch (topic) {
    case 1: return "Causal";
    case 2: return "Abstract concept";
    case 3: return "Sequential";
    }
    return "unknown";
}

std::string_view to_string(UsabilityItem item) {
    switch (item) {
    case UsabilityItem::overall_satisfaction: return "overall_satisfaction";
    case UsabilityItem::guide_validity: return "guide_validity";
    case UsabilityItem::intent_reflection: return "intent_reflection";
    case UsabilityItem::production_efficiency: return "production_efficiency";
    case UsabilityItem::intention_to_apply: return "intention_to_apply";
    }
    return "overall_satisfaction";
}

std::string_view usability_label(UsabilityItem item) {
    switch (item) {
    case UsabilityItem::overall_satisfaction: return "Overall Satisfaction";
    case UsabilityItem::guide_validity: return "Guide Validity";
    case UsabilityItem::intent_reflection: return "Intent Reflection";
    case UsabilityItem::production_efficiency: return "Production Efficiency";
    case UsabilityItem::intention_to_apply: return "Intention to Apply";
    }
    return "Overall Satisfaction";
}

std::optional<UsabilityItem> usability_item_from_string(std::string_view s) {
    for (UsabilityItem item : kUsabilityItems) {
        if (text::iequals(s, to_string(item))) return item;
    }
    return std::nullopt;
}

namespace {

struct Row {
    int line = 0;
    std::vector<std::string> cells;
};

[[noreturn]] void bad_value(int line, std::string_view column, std::string_view value, const std::string& why) {
    throw EvalError(EvalErrc::bad_value,
                    "line " + std::to_string(line) + ", column '" + std::string(column) + "': " + why,
                    {{"row", line}, {"column", std::string(column)}, {"value", std::string(value)}});
}

// RFC 4180 subset: quoted cells with doubled quotes, no embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line, int line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"' && text::trim(cell).empty()) {
            cell.clear();
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back(text::trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) bad_value(line_no, "", line, "unterminated quote");
    cells.emplace_back(text::trim(cell));
    return cells;
}

std::vector<Row> read_table(std::string_view csv, const std::vector<std::string_view>& header) {
    std::string_view body = csv;
    if (text::starts_with(body, "\xEF\xBB\xBF")) body.remove_prefix(3);
    const auto lines = text::split_lines(body);
    std::vector<Row> rows;
    bool have_header = false;
    int line_no = 0;
    for (std::string_view line : lines) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto cells = split_csv_line(line, line_no);
        if (!have_header) {
            bool ok = cells.size() == header.size();
            for (std::size_t i = 0; ok && i < header.size(); ++i) ok = text::iequals(cells[i], header[i]);
            if (!ok) {
                std::string expected;
                for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + std::string(header[i]);
                throw EvalError(EvalErrc::bad_header, "expected header '" + expected + "'",
                                {{"expected", expected}, {"found", std::string(text::trim(line))}});
            }
            have_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            bad_value(line_no, "", line,
                      "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        rows.push_back(Row{line_no, std::move(cells)});
    }
    if (!have_header) throw EvalError(EvalErrc::bad_header, "input has no header row");
    return rows;
}

std::string require_token(const Row& row, std::size_t col, std::string_view name) {
    const std::string& v = row.cells[col];
    if (v.empty()) bad_value(row.line, name, v, "empty value");
    return v;
}

int parse_int_in(const Row& row, std::size_t col, std::string_view name, int lo, int hi) {
    const std::string& v = row.cells[col];
    if (!text::all_digits(v) || v.size() > 3) bad_value(row.line, name, v, "not an integer");
    const int x = std::stoi(v);
    if (x < lo || x > hi) {
        bad_value(row.line, name, v, "out of range " + std::to_string(lo) + ".." + std::to_string(hi));
    }
    return x;
}

int parse_item(const Row& row, std::size_t col) {
    std::string_view v = row.cells[col];
    if (!v.empty() && (v.front() == 'Q' || v.front() == 'q')) v.remove_prefix(1);
    if (!text::all_digits(v) || v.size() > 2) bad_value(row.line, "item", row.cells[col], "expected Q1..Q13");
    const int item = std::stoi(std::string(v));
    if (item < 1 || item > kItemCount) bad_value(row.line, "item", row.cells[col], "expected Q1..Q13");
    return item;
}

[[noreturn]] void duplicate(int line, const std::string& key) {
    throw EvalError(EvalErrc::duplicate_record, "line " + std::to_string(line) + " repeats record " + key,
                    {{"row", line}, {"key", key}});
}

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"") == std::string::npos && text::trim(cell) == cell) return cell;
    return "\"" + text::replace_all(cell, "\"", "\"\"") + "\"";
}

} // namespace

std::vector<RatingRecord> ingest_ratings(std::string_view csv) {
    std::vector<RatingRecord> out;
    std::set<std::tuple<std::string, int, Condition, int>> seen;
    for (const Row& row : read_table(csv, {"participant_id", "topic", "condition", "item", "score"})) {
        RatingRecord r;
        r.participant_id = require_token(row, 0, "participant_id");
        r.topic = parse_int_in(row, 1, "topic", 1, kTopicCount);
        auto condition = condition_from_string(row.cells[2]);
        if (!condition) bad_value(row.line, "condition", row.cells[2], "expected baseline or pedacogen");
        r.condition = *condition;
        r.item = parse_item(row, 3);
        r.score = parse_int_in(row, 4, "score", 1, 5);
        if (!seen.emplace(r.participant_id, r.topic, r.condition, r.item).second) {
            duplicate(row.line, r.participant_id + "/topic " + std::to_string(r.topic) + "/" +
                                    std::string(to_string(r.condition)) + "/Q" + std::to_string(r.item));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<UsabilityRecord> ingest_usability(std::string_view csv) {
    std::vector<UsabilityRecord> out;
    std::set<std::pair<std::string, UsabilityItem>> seen;
    for (const Row& row : read_table(csv, {"participant_id", "item", "score"})) {
        UsabilityRecord r;
        r.participant_id = require_token(row, 0, "participant_id");
        auto item = usability_item_from_string(row.cells[1]);
        if (!item) bad_value(row.line, "item", row.cells[1], "unknown usability item");
        r.item = *item;
        r.score = parse_int_in(row, 2, "score", 1, 5);
        if (!seen.emplace(r.participant_id, r.item).second) {
            duplicate(row.line, r.participant_id + "/" + std::string(to_string(r.item)));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DemographicRecord> ingest_demographics(std::string_view csv) {
    std::vector<DemographicRecord> out;
    std::set<std::string> seen;
    for (const Row& row : read_table(csv, {"participant_id", "gender", "career_band", "ai_usage_band"})) {
        DemographicRecord r;
        r.participant_id = require_token(row, 0, "participant_id");
        r.gender = require_token(row, 1, "gender");
        r.career_band = require_token(row, 2, "career_band");
        r.ai_usage_band = require_token(row, 3, "ai_usage_band");
        if (!seen.insert(r.participant_id).second) duplicate(row.line, r.participant_id);
        out.push_back(std::move(r));
    }
    return out;
}

std::string ratings_to_csv(const std::vector<RatingRecord>& records) {
    std::string out = "participant_id,topic,condition,item,score\n";
    for (const auto& r : records) {
        out += quote(r.participant_id) + "," + std::to_string(r.topic) + "," + std::string(to_string(r.condition)) +
               ",Q" + std::to_string(r.item) + "," + std::to_string(r.score) + "\n";
    }
    return out;
}

std::string usability_to_csv(const std::vector<UsabilityRecord>& records) {
    std::string out = "participant_id,item,score\n";
    for (const auto& r : records) {
        out += quote(r.participant_id) + "," + std::string(to_string(r.item)) + "," + std::to_string(r.score) + "\n";
    }
    return out;
}

std::string demographics_to_csv(const std::vector<DemographicRecord>& records) {
    std::string out = "participant_id,gender,career_band,ai_usage_band\n";
    for (const auto& r : records) {
        out += quote(r.participant_id) + "," + quote(r.gender) + "," + quote(r.career_band) + "," +
               quote(r.ai_usage_band) + "\n";
    }
    return out;
}

} // namespace pedaco::eval
