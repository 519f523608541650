#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dcmlab {

/// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double carry = 0.0;
    for (const double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

/// Pairwise (tree) summation in index order; result is independent of how the
/// values were produced, which keeps parallel aggregation deterministic.
inline double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 16) {
        double s = 0.0;
        for (const double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
    return compensated_sum(diff);
}

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double ci_low = 0.0;    // mean -/+ 1.959964 * sqrt(variance / count)
    double ci_high = 0.0;
};

inline Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    s.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() > 1) {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - s.mean) * (values[i] - s.mean);
        s.variance = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    }
    const double half = 1.959963984540054 * std::sqrt(s.variance / static_cast<double>(s.count));
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
    return s;
}

/// Linear-interpolated quantile of sorted data (type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const auto k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|; inputs sorted.
inline double ks_distance_sorted(std::span<const double> a, std::span<const double> b) {
    std::size_t i = 0, j = 0;
    double best = 0.0;
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return ks_distance_sorted(a, b);
}

}  // namespace dcmlab
