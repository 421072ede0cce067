#pragma once

// Brute-force reference implementations. Deliberately naive: they share no
// code with the library and trade speed for obviousness.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Mid-rank of each value by counting, doubled so ties stay integral.
inline std::vector<long> doubled_ranks(const std::vector<double>& v) {
    std::vector<long> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        long less = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) ++less;
            if (w == v[i]) ++equal;
        }
        // mid-rank = less + (equal + 1) / 2
        out[i] = 2 * less + equal + 1;
    }
    return out;
}

struct SignedRank {
    double w_plus = 0;
    double w_minus = 0;
    int n = 0;
    double p = 1.0;
};

// Two-sided exact p by enumerating all 2^n sign assignments.
inline SignedRank wilcoxon_enumerate(const std::vector<double>& diffs) {
    std::vector<double> nz, mag;
    for (double d : diffs) {
        if (d != 0) {
            nz.push_back(d);
            mag.push_back(std::fabs(d));
        }
    }
    SignedRank out;
    out.n = static_cast<int>(nz.size());
    const auto r2 = doubled_ranks(mag);
    long total2 = 0, obs2 = 0;
    for (std::size_t i = 0; i < nz.size(); ++i) {
        total2 += r2[i];
        if (nz[i] > 0) obs2 += r2[i];
    }
    out.w_plus = obs2 / 2.0;
    out.w_minus = (total2 - obs2) / 2.0;
    // Compare |2*W - total| on doubled scale: W2 - total2/2, scaled by 2 again.
    const long obs_dev = std::labs(2 * obs2 - total2);
    std::uint64_t hits = 0;
    const std::uint64_t count = std::uint64_t{1} << nz.size();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        long w2 = 0;
        for (std::size_t i = 0; i < nz.size(); ++i) {
            if (mask >> i & 1) w2 += r2[i];
        }
        if (std::labs(2 * w2 - total2) >= obs_dev) ++hits;
    }
    out.p = static_cast<double>(hits) / static_cast<double>(count);
    return out;
}

struct RankSum {
    double u_a = 0;
    double u_b = 0;
    double p = 1.0;
};

// U by pair counting; p by enumerating every way to pick |a| of the pooled
// positions as group a.
inline RankSum mann_whitney_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    RankSum out;
    for (double x : a) {
        for (double y : b) {
            if (x > y) out.u_a += 1;
            if (x == y) out.u_a += 0.5;
        }
    }
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    out.u_b = na * nb - out.u_a;

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto r2 = doubled_ranks(pooled);
    const int n = static_cast<int>(pooled.size());
    const int k = static_cast<int>(a.size());
    long total2 = 0;
    for (long r : r2) total2 += r;
    long obs2 = 0;
    for (int i = 0; i < k; ++i) obs2 += r2[i];
    // Rank sum of group a, doubled; its null mean doubled is total2 * k / n.
    // Compare n*R2 - k*total2 to stay in integers.
    const long obs_dev = std::labs(static_cast<long>(n) * obs2 - static_cast<long>(k) * total2);
    std::uint64_t hits = 0, count = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        ++count;
        long s2 = 0;
        for (int i = 0; i < n; ++i) {
            if (mask >> i & 1) s2 += r2[i];
        }
        if (std::labs(static_cast<long>(n) * s2 - static_cast<long>(k) * total2) >= obs_dev) ++hits;
    }
    out.p = static_cast<double>(hits) / static_cast<double>(count);
    return out;
}

// Standard normal upper tail, independent of the library's erfc use.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Mean and sample SD by long-double two-pass.
struct Moments {
    double mean = 0;
    double sd = 0;
};

inline Moments two_pass(const std::vector<double>& v) {
    long double sum = 0;
    for (double x : v) sum += x;
    const long double mean = sum / v.size();
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    Moments m;
    m.mean = static_cast<double>(mean);
    m.sd = v.size() > 1 ? static_cast<double>(std::sqrt(ss / (v.size() - 1))) : 0.0;
    return m;
}

} // namespace oracle
