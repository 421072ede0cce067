#pragma once

// Study records and their CSV schemas:
//
//   ratings       participant_id,topic,condition,item,score
//   usability     participant_id,item,score
//   demographics  participant_id,gender,career_band,ai_usage_band

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/eval/stats.hpp"

namespace pedaco::eval {

enum class Condition { baseline, pedacogen };

std::string_view to_string(Condition c);
std::optional<Condition> condition_from_string(std::string_view s);

inline constexpr int kTopicCount = 3;
inline constexpr int kItemCount = 13;
inline constexpr int kOverallValidityItem = 13;

// Principle rated by item Q1..Q13.
std::string_view item_label(int item);
// "Causal", "Abstract concept", "Sequential" for topics 1..3.
std::string_view topic_label(int topic);

struct RatingRecord {
    std::string participant_id;
    int topic = 1;
    Condition condition = Condition::baseline;
    int item = 1;
    int score = 3;

    bool operator==(const RatingRecord&) const = default;
};

enum class UsabilityItem { overall_satisfaction, guide_validity, intent_reflection, production_efficiency, intention_to_apply };

inline constexpr std::array<UsabilityItem, 5> kUsabilityItems = {
    UsabilityItem::production_efficiency, UsabilityItem::guide_validity, UsabilityItem::intention_to_apply,
    UsabilityItem::overall_satisfaction, UsabilityItem::intent_reflection,
};

std::string_view to_string(UsabilityItem item);
std::string_view usability_label(UsabilityItem item);
std::optional<UsabilityItem> usability_item_from_string(std::string_view s);

struct UsabilityRecord {
    std::string participant_id;
    UsabilityItem item = UsabilityItem::overall_satisfaction;
    int score = 3;

    bool operator==(const UsabilityRecord&) const = default;
};

struct DemographicRecord {
    std::string participant_id;
    std::string gender;
    std::string career_band;
    std::string ai_usage_band;

    bool operator==(const DemographicRecord&) const = default;
};

// Errors: bad_header, bad_value (detail: row, column, value) where row is
// the 1-based line in the file, duplicate_record.
std::vector<RatingRecord> ingest_ratings(std::string_view csv);
std::vector<UsabilityRecord> ingest_usability(std::string_view csv);
std::vector<DemographicRecord> ingest_demographics(std::string_view csv);

std::string ratings_to_csv(const std::vector<RatingRecord>& records);
std::string usability_to_csv(const std::vector<UsabilityRecord>& records);
std::string demographics_to_csv(const std::vector<DemographicRecord>& records);

} // namespace pedaco::eval
