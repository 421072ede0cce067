#include "pedaco/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pedaco::eval {

std::string_view to_string(EvalErrc code) {
    switch (code) {
    case EvalErrc::bad_header: return "bad_header";
    case EvalErrc::bad_value: return "bad_value";
    case EvalErrc::duplicate_record: return "duplicate_record";
    case EvalErrc::empty_group: return "empty_group";
    case EvalErrc::all_zero_diffs: return "all_zero_diffs";
    case EvalErrc::incomplete_dataset: return "incomplete_dataset";
    case EvalErrc::bad_partition: return "bad_partition";
    }
    return "bad_value";
}

EvalError::EvalError(EvalErrc kind, const std::string& message, nlohmann::json detail)
    : Error(std::string(to_string(kind)), message, std::move(detail)), kind_(kind) {}

std::string_view to_string(TestKind kind) {
    return kind == TestKind::wilcoxon_signed_rank ? "wilcoxon_signed_rank" : "mann_whitney_u";
}

std::string_view to_string(Method method) { return method == Method::exact ? "exact" : "normal_approx"; }

std::string_view to_string(EffectLabel label) {
    switch (label) {
    case EffectLabel::negligible: return "negligible";
    case EffectLabel::small: return "small";
    case EffectLabel::medium: return "medium";
    case EffectLabel::large: return "large";
    }
    return "negligible";
}

EffectLabel effect_label(double r) {
    const double a = std::fabs(r);
    if (a >= 0.5) return EffectLabel::large;
    if (a >= 0.3) return EffectLabel::medium;
    if (a >= 0.1) return EffectLabel::small;
    return EffectLabel::negligible;
}

namespace {

// Sizes of the tie groups in `values` (groups of one included).
std::vector<int> tie_groups(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> groups;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        groups.push_back(static_cast<int>(j - i));
        i = j;
    }
    return groups;
}

double tie_term(std::span<const double> values) {
    double sum = 0.0;
    for (int t : tie_groups(values)) sum += static_cast<double>(t) * t * t - t;
    return sum;
}

double normal_two_sided(double deviation, double sigma) {
    if (sigma <= 0.0) return 1.0;
    const double z = std::max(0.0, std::fabs(deviation) - 0.5) / sigma;
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

void finish(StatResult& r, const TestOptions& options) {
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    r.effect_r = std::clamp(r.effect_r, -1.0, 1.0);
    r.effect_label = effect_label(r.effect_r);
    r.alpha = options.alpha;
    r.significant = r.p_value < options.alpha;
}

bool use_exact(MethodChoice choice, int n, int cutoff) {
    switch (choice) {
    case MethodChoice::exact: return true;
    case MethodChoice::normal_approx: return false;
    case MethodChoice::automatic: return n <= cutoff;
    }
    return n <= cutoff;
}

} // namespace

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        // Positions i..j-1 hold ranks i+1..j.
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

StatResult wilcoxon_signed_rank(std::span<const double> diffs, TestOptions options) {
    std::vector<double> nonzero;
    for (double d : diffs) {
        if (d != 0.0) nonzero.push_back(d);
    }
    if (nonzero.empty()) {
        throw EvalError(EvalErrc::all_zero_diffs, "every paired difference is zero; the signed-rank test is undefined",
                        {{"n", diffs.size()}});
    }
    const int n = static_cast<int>(nonzero.size());
    std::vector<double> magnitudes;
    for (double d : nonzero) magnitudes.push_back(std::fabs(d));
    const std::vector<double> ranks = average_ranks(magnitudes);

    StatResult r;
    r.test = TestKind::wilcoxon_signed_rank;
    r.n_effective = n;
    for (int i = 0; i < n; ++i) (nonzero[i] > 0 ? r.positive_sum : r.negative_sum) += ranks[i];
    r.statistic = std::min(r.positive_sum, r.negative_sum);
    r.effect_r = (r.positive_sum - r.negative_sum) / (r.positive_sum + r.negative_sum);

    if (use_exact(options.method, n, kWilcoxonExactMax)) {
        r.method = Method::exact;
        // counts[s]: sign assignments whose doubled positive rank sum is s.
        std::vector<int> doubled;
        int total = 0;
        for (double rank : ranks) {
            doubled.push_back(static_cast<int>(std::lround(2.0 * rank)));
            total += doubled.back();
        }
        std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
        counts[0] = 1.0;
        int reach = 0;
        for (int w : doubled) {
            for (int s = reach; s >= 0; --s) {
                if (counts[s] != 0.0) counts[s + w] += counts[s];
            }
            reach += w;
        }
        const int observed = static_cast<int>(std::lround(2.0 * r.positive_sum));
        // Doubled mean is total/2; compare doubled deviations to stay integral.
        const long long dev = std::llabs(2LL * observed - total);
        double extreme = 0.0;
        for (int s = 0; s <= total; ++s) {
            if (std::llabs(2LL * s - total) >= dev) extreme += counts[s];
        }
        r.p_value = std::ldexp(extreme, -n);
    } else {
        r.method = Method::normal_approx;
        const double nn = n;
        const double mean = nn * (nn + 1.0) / 4.0;
        const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term(magnitudes) / 48.0;
        r.p_value = normal_two_sided(r.positive_sum - mean, std::sqrt(std::max(0.0, variance)));
    }
    finish(r, options);
    return r;
}

StatResult mann_whitney_u(std::span<const double> a, std::span<const double> b, TestOptions options) {
    if (a.empty() || b.empty()) {
        throw EvalError(EvalErrc::empty_group, "both groups need at least one observation",
                        {{"n_a", a.size()}, {"n_b", b.size()}});
    }
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    const int total_n = na + nb;
    std::vector<double> joint(a.begin(), a.end());
    joint.insert(joint.end(), b.begin(), b.end());
    const std::vector<double> ranks = average_ranks(joint);

    double rank_sum_a = 0.0;
    for (int i = 0; i < na; ++i) rank_sum_a += ranks[i];
    const double product = static_cast<double>(na) * nb;

    StatResult r;
    r.test = TestKind::mann_whitney_u;
    r.n_effective = total_n;
    r.positive_sum = rank_sum_a - na * (na + 1.0) / 2.0;
    r.negative_sum = product - r.positive_sum;
    r.statistic = std::min(r.positive_sum, r.negative_sum);
    r.effect_r = (r.positive_sum - r.negative_sum) / product;

    if (use_exact(options.method, total_n, kMannWhitneyExactMax)) {
        r.method = Method::exact;
        // counts[k][s]: k-subsets of the joint ranks with doubled sum s.
        std::vector<int> doubled;
        int total = 0;
        for (double rank : ranks) {
            doubled.push_back(static_cast<int>(std::lround(2.0 * rank)));
            total += doubled.back();
        }
        std::vector<std::vector<double>> counts(na + 1, std::vector<double>(total + 1, 0.0));
        counts[0][0] = 1.0;
        for (int w : doubled) {
            for (int k = na; k >= 1; --k) {
                for (int s = total; s >= w; --s) {
                    if (counts[k - 1][s - w] != 0.0) counts[k][s] += counts[k - 1][s - w];
                }
            }
        }
        // Doubled mean of the a-side rank sum is na*(N+1); deviations doubled again.
        const long long mean2 = static_cast<long long>(na) * (total_n + 1);
        const long long observed = std::llround(2.0 * rank_sum_a);
        const long long dev = std::llabs(observed - mean2);
        double extreme = 0.0;
        double all = 0.0;
        for (int s = 0; s <= total; ++s) {
            all += counts[na][s];
            if (std::llabs(s - mean2) >= dev) extreme += counts[na][s];
        }
        r.p_value = extreme / all;
    } else {
        r.method = Method::normal_approx;
        const double n = total_n;
        const double variance = product / 12.0 * ((n + 1.0) - tie_term(joint) / (n * (n - 1.0)));
        r.p_value = normal_two_sided(r.positive_sum - product / 2.0, std::sqrt(std::max(0.0, variance)));
    }
    finish(r, options);
    return r;
}

Descriptive describe(std::span<const double> values) {
    if (values.empty()) throw EvalError(EvalErrc::empty_group, "cannot describe an empty group");
    // Neumaier-compensated sum for the mean.
    double sum = 0.0;
    double carry = 0.0;
    for (double x : values) {
        const double t = sum + x;
        carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    Descriptive d;
    d.n = static_cast<int>(values.size());
    d.mean = (sum + carry) / d.n;
    if (d.n > 1) {
        // Corrected two-pass: the second term cancels residual error in the mean.
        double squares = 0.0;
        double residual = 0.0;
        for (double x : values) {
            const double dx = x - d.mean;
            squares += dx * dx;
            residual += dx;
        }
        const double variance = (squares - residual * residual / d.n) / (d.n - 1);
        d.sd = std::sqrt(std::max(0.0, variance));
    }
    return d;
}

double round_half_away(double x, int digits) {
    const double scale = std::pow(10.0, digits);
    const double scaled = x * scale;
    // Nudge values sitting a rounding error below a half.
    const double nudged = scaled + std::copysign(1e-9, scaled);
    return std::round(nudged) / scale;
}

} // namespace pedaco::eval
