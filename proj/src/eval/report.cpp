#include "pedaco/eval/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>

namespace pedaco::eval {

using nlohmann::json;

namespace {

// cells[topic-1][condition][item-1]
using Cells = std::array<std::array<std::array<std::optional<int>, kItemCount>, 2>, kTopicCount>;

struct Index {
    // Sorted participant ids.
    std::map<std::string, Cells> by_participant;
};

Index index_ratings(const std::vector<RatingRecord>& records) {
    Index idx;
    for (const auto& r : records) {
        idx.by_participant[r.participant_id][r.topic - 1][static_cast<int>(r.condition)][r.item - 1] = r.score;
    }
    return idx;
}

std::string cell_name(const std::string& pid, int topic, Condition c, int item) {
    return pid + "/topic " + std::to_string(topic) + "/" + std::string(to_string(c)) + "/Q" + std::to_string(item);
}

// Every participant must hold both conditions for `items` across `topics`.
void require_complete(const Index& idx, const std::vector<int>& topics, const std::vector<int>& items) {
    if (idx.by_participant.empty()) throw EvalError(EvalErrc::incomplete_dataset, "no rating records");
    std::vector<std::string> missing;
    std::size_t count = 0;
    for (const auto& [pid, cells] : idx.by_participant) {
        for (int t : topics) {
            for (int c = 0; c < 2; ++c) {
                for (int item : items) {
                    if (cells[t - 1][c][item - 1]) continue;
                    ++count;
                    if (missing.size() < 50) missing.push_back(cell_name(pid, t, static_cast<Condition>(c), item));
                }
            }
        }
    }
    if (count > 0) {
        throw EvalError(EvalErrc::incomplete_dataset,
                        std::to_string(count) + " rating(s) missing, first: " + missing.front(),
                        {{"missing", missing}, {"missing_count", count}});
    }
}

std::vector<int> all_topics() { return {1, 2, 3}; }

std::vector<int> all_items() {
    std::vector<int> items;
    for (int i = 1; i <= kItemCount; ++i) items.push_back(i);
    return items;
}

std::optional<StatResult> signed_rank_or_undefined(const std::vector<double>& diffs, const TestOptions& options) {
    try {
        return wilcoxon_signed_rank(diffs, options);
    } catch (const EvalError& e) {
        if (e.kind() == EvalErrc::all_zero_diffs) return std::nullopt;
        throw;
    }
}

ComparisonRow compare(std::string key, std::string label, const std::vector<double>& base,
                      const std::vector<double>& ped, const std::vector<double>& diffs, const TestOptions& options) {
    ComparisonRow row;
    row.key = std::move(key);
    row.label = std::move(label);
    row.baseline_mean = describe(base).mean;
    row.pedacogen_mean = describe(ped).mean;
    row.improvement = round_half_away(round_half_away(row.pedacogen_mean) - round_half_away(row.baseline_mean));
    row.n_pairs = static_cast<int>(diffs.size());
    row.stat = signed_rank_or_undefined(diffs, options);
    return row;
}

// Sum over topics of one participant's score for item/condition.
int topic_sum(const Cells& cells, int condition, int item) {
    int sum = 0;
    for (int t = 0; t < kTopicCount; ++t) sum += *cells[t][condition][item - 1];
    return sum;
}

// --- plain-text tables -------------------------------------------------------

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    // Display width in code points so UTF-8 labels stay aligned.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char c : s) w += (c & 0xC0) != 0x80;
        return w;
    };
    std::vector<std::size_t> widths(header.size(), 0);
    for (std::size_t i = 0; i < header.size(); ++i) widths[i] = width(header[i]);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) widths[i] = std::max(widths[i], width(row[i]));
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out += cells[i];
            if (i + 1 < cells.size()) out += std::string(widths[i] - width(cells[i]) + 2, ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (std::size_t w : widths) total += w + 2;
    out += std::string(total > 2 ? total - 2 : 0, '-') + "\n";
    for (const auto& row : rows) out += line(row);
    return out;
}

std::string sig_mark(const std::optional<StatResult>& s) { return s && s->significant ? "*" : ""; }

std::string p_cell(const std::optional<StatResult>& s) { return s ? format_p(s->p_value) : "n.s./undefined"; }

std::string person_group(const DemographicRecord& d, Partition partition, const GroupMap& groups) {
    const std::string& raw = partition == Partition::gender ? d.gender
                             : partition == Partition::career ? d.career_band
                                                              : d.ai_usage_band;
    auto it = groups.find(raw);
    return it == groups.end() ? raw : it->second;
}

struct Split {
    std::string a;
    std::string b;
    // participant id -> true for group a.
    std::map<std::string, bool> side;
};

Split split_participants(const std::set<std::string>& participants, const std::vector<DemographicRecord>& demographics,
                         Partition partition, const GroupMap& groups) {
    std::map<std::string, std::string> group_of;
    for (const auto& d : demographics) group_of[d.participant_id] = person_group(d, partition, groups);
    std::set<std::string> labels;
    std::vector<std::string> unknown;
    for (const auto& pid : participants) {
        auto it = group_of.find(pid);
        if (it == group_of.end()) {
            unknown.push_back(pid);
        } else {
            labels.insert(it->second);
        }
    }
    if (!unknown.empty()) {
        throw EvalError(EvalErrc::incomplete_dataset,
                        std::to_string(unknown.size()) + " participant(s) lack demographics, first: " + unknown.front(),
                        {{"missing", unknown}});
    }
    if (labels.size() < 2) {
        throw EvalError(EvalErrc::empty_group,
                        "partition '" + std::string(to_string(partition)) + "' leaves one side empty",
                        {{"groups", std::vector<std::string>(labels.begin(), labels.end())}});
    }
    if (labels.size() > 2) {
        throw EvalError(EvalErrc::bad_partition,
                        "partition '" + std::string(to_string(partition)) + "' yields " +
                            std::to_string(labels.size()) + " groups; map them onto two",
                        {{"groups", std::vector<std::string>(labels.begin(), labels.end())}});
    }
    Split s;
    s.a = *labels.begin();
    s.b = *labels.rbegin();
    for (const auto& pid : participants) s.side[pid] = group_of[pid] == s.a;
    return s;
}

SubgroupRow subgroup_row(std::string key, std::string label, const Split& split,
                         const std::map<std::string, double>& values, const TestOptions& options) {
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& [pid, v] : values) (split.side.at(pid) ? a : b).push_back(v);
    SubgroupRow row;
    row.key = std::move(key);
    row.label = std::move(label);
    row.group_a = split.a;
    row.group_b = split.b;
    row.n_a = static_cast<int>(a.size());
    row.n_b = static_cast<int>(b.size());
    row.stat = mann_whitney_u(a, b, options);
    row.mean_a = describe(a).mean;
    row.mean_b = describe(b).mean;
    return row;
}

} // namespace

std::vector<ComparisonRow> improvement_table(const std::vector<RatingRecord>& records, TestOptions options) {
    const Index idx = index_ratings(records);
    require_complete(idx, all_topics(), all_items());
    std::vector<ComparisonRow> rows;
    for (int item = 1; item <= kItemCount; ++item) {
        std::vector<double> base;
        std::vector<double> ped;
        std::vector<double> diffs;
        for (const auto& [pid, cells] : idx.by_participant) {
            for (int t = 0; t < kTopicCount; ++t) {
                base.push_back(*cells[t][0][item - 1]);
                ped.push_back(*cells[t][1][item - 1]);
            }
            // Integer numerator keeps equal sums exactly zero.
            diffs.push_back(static_cast<double>(topic_sum(cells, 1, item) - topic_sum(cells, 0, item)) / kTopicCount);
        }
        rows.push_back(compare("Q" + std::to_string(item), std::string(item_label(item)), base, ped, diffs, options));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& x, const ComparisonRow& y) {
        // Improvements are multiples of 0.01; compare in hundredths.
        return std::lround(x.improvement * 100) > std::lround(y.improvement * 100);
    });
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<int>(i) + 1;
    return rows;
}

std::vector<ComparisonRow> topic_table(const std::vector<RatingRecord>& records, int item, TestOptions options) {
    if (item < 1 || item > kItemCount) {
        throw EvalError(EvalErrc::bad_value, "item must be Q1..Q13", {{"item", item}});
    }
    const Index idx = index_ratings(records);
    require_complete(idx, all_topics(), {item});
    std::vector<ComparisonRow> rows;
    for (int topic = 1; topic <= kTopicCount; ++topic) {
        std::vector<double> base;
        std::vector<double> ped;
        std::vector<double> diffs;
        for (const auto& [pid, cells] : idx.by_participant) {
            const int b = *cells[topic - 1][0][item - 1];
            const int p = *cells[topic - 1][1][item - 1];
            base.push_back(b);
            ped.push_back(p);
            diffs.push_back(p - b);
        }
        rows.push_back(
            compare("Topic " + std::to_string(topic), std::string(topic_label(topic)), base, ped, diffs, options));
    }
    return rows;
}

std::string_view to_string(Partition p) {
    switch (p) {
    case Partition::gender: return "gender";
    case Partition::career: return "career";
    case Partition::ai_usage: return "ai_usage";
    }
    return "gender";
}

std::optional<Partition> partition_from_string(std::string_view s) {
    for (Partition p : {Partition::gender, Partition::career, Partition::ai_usage}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

GroupMap parse_group_map(std::string_view spec) {
    GroupMap out;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t end = spec.find(',', start);
        if (end == std::string_view::npos) end = spec.size();
        const std::string_view entry = spec.substr(start, end - start);
        start = end + 1;
        if (entry.find_first_not_of(" \t") == std::string_view::npos) continue;
        const std::size_t eq = entry.rfind('=');
        auto trimmed = [](std::string_view s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
        };
        if (eq == std::string_view::npos || trimmed(entry.substr(0, eq)).empty() ||
            trimmed(entry.substr(eq + 1)).empty()) {
            throw EvalError(EvalErrc::bad_value, "group map entry '" + std::string(entry) + "' is not value=group",
                            {{"entry", std::string(entry)}});
        }
        out[trimmed(entry.substr(0, eq))] = trimmed(entry.substr(eq + 1));
    }
    return out;
}

std::vector<SubgroupRow> subgroup_compare(const std::vector<UsabilityRecord>& usability,
                                          const std::vector<DemographicRecord>& demographics, Partition partition,
                                          const GroupMap& groups, TestOptions options) {
    std::set<std::string> participants;
    for (const auto& u : usability) participants.insert(u.participant_id);
    if (participants.empty()) throw EvalError(EvalErrc::empty_group, "no usability records");
    const Split split = split_participants(participants, demographics, partition, groups);
    std::vector<SubgroupRow> rows;
    for (UsabilityItem item : kUsabilityItems) {
        std::map<std::string, double> values;
        for (const auto& u : usability) {
            if (u.item == item) values[u.participant_id] = u.score;
        }
        if (values.empty()) continue;
        rows.push_back(
            subgroup_row(std::string(to_string(item)), std::string(usability_label(item)), split, values, options));
    }
    return rows;
}

std::vector<SubgroupRow> subgroup_compare(const std::vector<RatingRecord>& ratings,
                                          const std::vector<DemographicRecord>& demographics, Partition partition,
                                          const GroupMap& groups, TestOptions options) {
    const Index idx = index_ratings(ratings);
    require_complete(idx, all_topics(), all_items());
    std::set<std::string> participants;
    for (const auto& [pid, cells] : idx.by_participant) participants.insert(pid);
    const Split split = split_participants(participants, demographics, partition, groups);
    std::vector<SubgroupRow> rows;
    for (int item = 1; item <= kItemCount; ++item) {
        std::map<std::string, double> values;
        for (const auto& [pid, cells] : idx.by_participant) {
            values[pid] = static_cast<double>(topic_sum(cells, 1, item) - topic_sum(cells, 0, item)) / kTopicCount;
        }
        rows.push_back(subgroup_row("Q" + std::to_string(item), std::string(item_label(item)), split, values, options));
    }
    return rows;
}

std::vector<DescriptiveRow> descriptive(const std::vector<UsabilityRecord>& usability) {
    std::vector<DescriptiveRow> rows;
    for (UsabilityItem item : kUsabilityItems) {
        std::vector<double> scores;
        for (const auto& u : usability) {
            if (u.item == item) scores.push_back(u.score);
        }
        if (scores.empty()) continue;
        rows.push_back({std::string(to_string(item)), std::string(usability_label(item)), describe(scores)});
    }
    if (rows.empty()) throw EvalError(EvalErrc::empty_group, "no usability records");
    return rows;
}

std::vector<DescriptiveRow> descriptive(const std::vector<RatingRecord>& ratings) {
    std::vector<DescriptiveRow> rows;
    for (Condition c : {Condition::baseline, Condition::pedacogen}) {
        std::vector<double> scores;
        for (const auto& r : ratings) {
            if (r.condition == c) scores.push_back(r.score);
        }
        if (scores.empty()) {
            throw EvalError(EvalErrc::empty_group, "no ratings for condition " + std::string(to_string(c)));
        }
        const std::string key(to_string(c));
        rows.push_back({key, c == Condition::baseline ? "Baseline" : "Pedacogen", describe(scores)});
    }
    return rows;
}

std::string format_fixed2(double x) {
    char buf[32];
    double v = round_half_away(x);
    if (v == 0.0) v = 0.0;
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string format_signed(double x) {
    const double v = round_half_away(x);
    if (v == 0.0) return "0.00";
    return (v > 0 ? "+" : "") + format_fixed2(v);
}

namespace {

// Drops the leading zero: "0.045" -> ".045", "-0.42" -> "-.42".
std::string without_leading_zero(std::string s) {
    if (s.rfind("0.", 0) == 0) return s.substr(1);
    if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
    return s;
}

} // namespace

std::string format_p(double p) {
    if (p < 0.01) return "< .01";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", round_half_away(p, 3));
    return without_leading_zero(buf);
}

std::string format_r(double r) {
    char buf[32];
    double v = round_half_away(r);
    if (v == 0.0) v = 0.0;
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return without_leading_zero(buf);
}

std::string render_improvement_text(const std::vector<ComparisonRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({std::to_string(r.rank), r.label, format_fixed2(r.baseline_mean),
                         format_fixed2(r.pedacogen_mean), format_signed(r.improvement), p_cell(r.stat),
                         sig_mark(r.stat), r.stat ? format_r(r.stat->effect_r) : "-",
                         r.stat ? std::string(to_string(r.stat->effect_label)) : "-"});
    }
    return render_table(
        {"Rank", "Principle", "Baseline", "Pedacogen", "Improvement", "p-value", "Sig.", "r", "Effect Size"}, cells);
}

std::string render_topic_text(const std::vector<ComparisonRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({r.key, r.label, format_fixed2(r.baseline_mean), format_fixed2(r.pedacogen_mean),
                         format_signed(r.improvement), p_cell(r.stat), sig_mark(r.stat)});
    }
    return render_table({"Topic", "Explanation Type", "Baseline", "Pedacogen", "Improvement", "p-value", "Sig."},
                        cells);
}

std::string render_subgroup_text(const std::vector<SubgroupRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    std::string a = rows.empty() ? "A" : rows.front().group_a;
    std::string b = rows.empty() ? "B" : rows.front().group_b;
    for (const auto& r : rows) {
        char u[32];
        std::snprintf(u, sizeof u, "%g", r.stat.statistic);
        cells.push_back({r.label, std::to_string(r.n_a), format_fixed2(r.mean_a), std::to_string(r.n_b),
                         format_fixed2(r.mean_b), u, format_p(r.stat.p_value), r.stat.significant ? "*" : "",
                         format_r(r.stat.effect_r), std::string(to_string(r.stat.effect_label))});
    }
    return render_table({"Item", "n " + a, "M " + a, "n " + b, "M " + b, "U", "p-value", "Sig.", "r", "Effect Size"},
                        cells);
}

std::string render_descriptive_text(const std::vector<DescriptiveRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({r.label, std::to_string(r.stats.n), format_fixed2(r.stats.mean), format_fixed2(r.stats.sd),
                         format_fixed2(r.stats.mean) + " (" + format_fixed2(r.stats.sd) + ")"});
    }
    return render_table({"Item", "N", "M", "SD", "M (SD)"}, cells);
}

json to_json(const StatResult& r) {
    return json{{"test", std::string(to_string(r.test))},
                {"statistic", r.statistic},
                {"n_effective", r.n_effective},
                {"p_value", r.p_value},
                {"p_display", format_p(r.p_value)},
                {"method", std::string(to_string(r.method))},
                {"effect_r", r.effect_r},
                {"effect_label", std::string(to_string(r.effect_label))},
                {"alpha", r.alpha},
                {"significant", r.significant}};
}

json to_json(const std::vector<ComparisonRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json j = {{"key", r.key},
                  {"label", r.label},
                  {"baseline", r.baseline_mean},
                  {"pedacogen", r.pedacogen_mean},
                  {"baseline_display", format_fixed2(r.baseline_mean)},
                  {"pedacogen_display", format_fixed2(r.pedacogen_mean)},
                  {"improvement", r.improvement},
                  {"improvement_display", format_signed(r.improvement)},
                  {"n_pairs", r.n_pairs},
                  {"stat", r.stat ? to_json(*r.stat) : json(nullptr)},
                  {"p_display", p_cell(r.stat)}};
        if (r.rank > 0) j["rank"] = r.rank;
        out.push_back(std::move(j));
    }
    return out;
}

json to_json(const std::vector<SubgroupRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"key", r.key},
                       {"label", r.label},
                       {"group_a", r.group_a},
                       {"group_b", r.group_b},
                       {"n_a", r.n_a},
                       {"n_b", r.n_b},
                       {"mean_a", r.mean_a},
                       {"mean_b", r.mean_b},
                       {"stat", to_json(r.stat)}});
    }
    return out;
}

json to_json(const std::vector<DescriptiveRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"key", r.key},
                       {"label", r.label},
                       {"n", r.stats.n},
                       {"mean", r.stats.mean},
                       {"sd", r.stats.sd},
                       {"display", format_fixed2(r.stats.mean) + " (" + format_fixed2(r.stats.sd) + ")"}});
    }
    return out;
}

} // namespace pedaco::eval
