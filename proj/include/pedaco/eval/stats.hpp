#pragma once

// Two-sided rank tests with rank-biserial effect sizes, plus descriptive
// statistics. Exact null distributions are built by dynamic programming over
// doubled rank sums, so average ranks for ties stay integral.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pedaco/error.hpp"

namespace pedaco::eval {

enum class EvalErrc {
    bad_header,
    bad_value,
    duplicate_record,
    empty_group,
    all_zero_diffs,
    incomplete_dataset,
    bad_partition,
};

std::string_view to_string(EvalErrc code);

class EvalError : public Error {
public:
    EvalError(EvalErrc kind, const std::string& message, nlohmann::json detail = nlohmann::json::object());
    EvalErrc kind() const noexcept { return kind_; }

private:
    EvalErrc kind_;
};

enum class TestKind { wilcoxon_signed_rank, mann_whitney_u };
enum class Method { exact, normal_approx };
enum class EffectLabel { negligible, small, medium, large };
// automatic: exact up to the cutoff, normal approximation above it.
enum class MethodChoice { automatic, exact, normal_approx };

std::string_view to_string(TestKind kind);
std::string_view to_string(Method method);
std::string_view to_string(EffectLabel label);

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr int kWilcoxonExactMax = 20;
inline constexpr int kMannWhitneyExactMax = 14;

// |r| >= .5 large, >= .3 medium, >= .1 small.
EffectLabel effect_label(double r);

struct StatResult {
    TestKind test = TestKind::wilcoxon_signed_rank;
    // min(W+, W-) or min(U_a, U_b).
    double statistic = 0.0;
    int n_effective = 0;
    double p_value = 1.0;
    Method method = Method::exact;
    double effect_r = 0.0;
    EffectLabel effect_label = EffectLabel::negligible;
    double alpha = kDefaultAlpha;
    bool significant = false;
    // W+/W- for the signed-rank test, U_a/U_b for the rank-sum test.
    double positive_sum = 0.0;
    double negative_sum = 0.0;
};

struct TestOptions {
    double alpha = kDefaultAlpha;
    MethodChoice method = MethodChoice::automatic;
};

// Average ranks (1-based) of `values`, ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

// Zeros are dropped; throws EvalError(all_zero_diffs) when nothing remains.
StatResult wilcoxon_signed_rank(std::span<const double> diffs, TestOptions options = {});

// Throws EvalError(empty_group) when either side is empty. effect_r is
// positive when `a` holds the larger ranks.
StatResult mann_whitney_u(std::span<const double> a, std::span<const double> b, TestOptions options = {});

struct Descriptive {
    double mean = 0.0;
    // Sample SD (n - 1); 0 for a single observation.
    double sd = 0.0;
    int n = 0;
};

// Throws EvalError(empty_group) on empty input.
Descriptive describe(std::span<const double> values);

// Half away from zero at `digits` decimals.
double round_half_away(double x, int digits = 2);

} // namespace pedaco::eval
