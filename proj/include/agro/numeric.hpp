#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace agro {

/// Neumaier-compensated sum. Naive summation of 21 copies of 0.7 lands just
/// below 14.7, which would flip the category of an exactly-at-limit profile.
template <typename Range>
double stable_sum(const Range& xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x)) comp += (sum - t) + x;
        else comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

/// Mean of `xs`, clamped to [min, max] of the inputs. The final division can
/// round just outside that range (three copies of 0.7 average to
/// 0.6999999999999998), and a score sitting on a threshold must stay there.
template <typename Range>
double stable_mean(const Range& xs) {
    std::size_t n = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : xs) {
        ++n;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (n == 0) return 0.0;
    return std::clamp(stable_sum(xs) / static_cast<double>(n), lo, hi);
}

/// Threshold between two adjacent sorted values `lo < hi` such that
/// `lo <= t < hi`. The plain midpoint rounds up to `hi` when the two are one
/// ulp apart, which would put both on the same side of a `<=` test.
inline double split_point(double lo, double hi) {
    const double mid = (lo + hi) / 2.0;
    return mid < hi ? mid : lo;
}

/// Comparisons between entropies computed along different summation paths
/// treat differences below this as ties.
inline constexpr double kEntropyTolerance = 1e-12;

/// Shannon entropy in bits of a count vector; 0 for an empty or all-zero vector.
template <typename Counts>
double entropy_of(const Counts& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

}  // namespace agro
