#pragma once

// Condition-comparison and subgroup reports over study records, with
// plain-text and JSON renderings.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedaco/eval/records.hpp"
#include "pedaco/eval/stats.hpp"

namespace pedaco::eval {

struct ComparisonRow {
    // 1-based position after sorting (improvement table); 0 elsewhere.
    int rank = 0;
    std::string key;
    std::string label;
    double baseline_mean = 0.0;
    double pedacogen_mean = 0.0;
    // Difference of the two means as printed (each rounded to 2 decimals).
    double improvement = 0.0;
    int n_pairs = 0;
    // Absent when every paired difference is zero.
    std::optional<StatResult> stat;
};

// Per item, participants paired on their mean score across topics.
// Rows sorted by improvement descending, ties by item number.
// Throws EvalError(incomplete_dataset) listing missing cells.
std::vector<ComparisonRow> improvement_table(const std::vector<RatingRecord>& records, TestOptions options = {});

// One row per topic for a single item, paired per participant.
std::vector<ComparisonRow> topic_table(const std::vector<RatingRecord>& records, int item = kOverallValidityItem,
                                       TestOptions options = {});

enum class Partition { gender, career, ai_usage };

std::string_view to_string(Partition p);
std::optional<Partition> partition_from_string(std::string_view s);

// Maps raw demographic values onto group labels; unmapped values keep their
// own label. After mapping exactly two groups must remain.
using GroupMap = std::map<std::string, std::string>;

// "1-2/week=frequent,>=3/week=frequent" -> map; each entry splits at its
// last '='. Throws bad_value on a malformed entry.
GroupMap parse_group_map(std::string_view spec);

struct SubgroupRow {
    std::string key;
    std::string label;
    std::string group_a;
    std::string group_b;
    int n_a = 0;
    int n_b = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    StatResult stat;
};

// Mann-Whitney per usability item between the two partition groups.
std::vector<SubgroupRow> subgroup_compare(const std::vector<UsabilityRecord>& usability,
                                          const std::vector<DemographicRecord>& demographics, Partition partition,
                                          const GroupMap& groups = {}, TestOptions options = {});

// Same, per rating item, on each participant's mean improvement.
std::vector<SubgroupRow> subgroup_compare(const std::vector<RatingRecord>& ratings,
                                          const std::vector<DemographicRecord>& demographics, Partition partition,
                                          const GroupMap& groups = {}, TestOptions options = {});

struct DescriptiveRow {
    std::string key;
    std::string label;
    Descriptive stats;
};

// Usability items in reporting order.
std::vector<DescriptiveRow> descriptive(const std::vector<UsabilityRecord>& usability);
// Per condition over every rating.
std::vector<DescriptiveRow> descriptive(const std::vector<RatingRecord>& ratings);

// "3.07"
std::string format_fixed2(double x);
// "+0.96", "-0.10", "0.00"
std::string format_signed(double x);
// "< .01", ".045", "1.000"
std::string format_p(double p);
// ".88", "-.42"
std::string format_r(double r);

std::string render_improvement_text(const std::vector<ComparisonRow>& rows);
std::string render_topic_text(const std::vector<ComparisonRow>& rows);
std::string render_subgroup_text(const std::vector<SubgroupRow>& rows);
std::string render_descriptive_text(const std::vector<DescriptiveRow>& rows);

nlohmann::json to_json(const StatResult& r);
nlohmann::json to_json(const std::vector<ComparisonRow>& rows);
nlohmann::json to_json(const std::vector<SubgroupRow>& rows);
nlohmann::json to_json(const std::vector<DescriptiveRow>& rows);

} // namespace pedaco::eval
