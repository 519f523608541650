#pragma once

// Population dynamics for the recursive distributional equation describing
// the bulk law of n * pi, and tail-exponent fits for the resulting samples.
//
// Kernel: draw a vertex type with probability proportional to fraction * out,
// i.e. the type of the vertex owning a uniform tail; draw in_deg members of
// the previous pool uniformly with replacement; the new sample is their sum
// divided by out_deg. For the (2,3)(3,2) family this is
//     Z = (1/M) * sum_{k=1}^{5-M} Z_k,  P(M=2) = 2/5, P(M=3) = 3/5.
// X-samples draw a uniform vertex type and set X = (n/m) * sum_{k=1}^{in} Z_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcmlab/degseq.hpp"
#include "dcmlab/error.hpp"
#include "dcmlab/parallel.hpp"
#include "dcmlab/rng.hpp"
#include "dcmlab/stats.hpp"

namespace dcmlab {

class RdeKernel {
public:
    RdeKernel() = default;

    explicit RdeKernel(const DegreeModel& model) {
        model.validate(false);
        double tail_total = 0.0, vertex_total = 0.0;
        for (const auto& e : model.entries) {
            types_.push_back(e.type);
            tail_total += e.fraction.value() * e.type.out_deg;
            vertex_total += e.fraction.value();
            tail_cdf_.push_back(tail_total);
            vertex_cdf_.push_back(vertex_total);
        }
        for (auto& c : tail_cdf_) c /= tail_total;
        for (auto& c : vertex_cdf_) c /= vertex_total;
        tail_cdf_.back() = 1.0;
        vertex_cdf_.back() = 1.0;
        n_over_m_ = 1.0 / model.mean_degree();
    }

    std::span<const DegreeType> types() const { return types_; }
    /// Probability that the owner of a uniform tail has type i.
    double tail_probability(std::size_t i) const { return tail_cdf_[i] - (i ? tail_cdf_[i - 1] : 0.0); }
    double vertex_probability(std::size_t i) const { return vertex_cdf_[i] - (i ? vertex_cdf_[i - 1] : 0.0); }
    double n_over_m() const { return n_over_m_; }

    bool degenerate() const {
        return std::all_of(types_.begin(), types_.end(), [&](DegreeType t) { return t == types_.front(); }) &&
               types_.front().in_deg == types_.front().out_deg;
    }

    DegreeType draw_tail_type(Philox& rng) const { return types_[pick(tail_cdf_, rng.uniform())]; }
    DegreeType draw_vertex_type(Philox& rng) const { return types_[pick(vertex_cdf_, rng.uniform())]; }

private:
    static std::size_t pick(const std::vector<double>& cdf, double u) {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    }

    std::vector<DegreeType> types_;
    std::vector<double> tail_cdf_;
    std::vector<double> vertex_cdf_;
    double n_over_m_ = 1.0;
};

struct RdePopulation {
    std::vector<double> pool;
    std::uint64_t round = 0;
    RdeKernel kernel;
    std::uint64_t seed = 0;
    /// The fixed-point equation is homogeneous, so the mean-one solution is
    /// selected by rescaling each new pool to mean 1.
    bool renormalize = true;
    /// Mean of each round's pool before rescaling (entry r-1 for round r).
    std::vector<double> raw_means;
};

inline constexpr std::uint64_t kRdeInitTag = 0x696e6974;  // "init"

/// Initial pool: Exp(1) samples (mean one), sample i from stream i of
/// derive_seed(seed, kRdeInitTag).
inline RdePopulation make_population(const DegreeModel& model, std::size_t pool_size, std::uint64_t seed,
                                     bool renormalize = true) {
    RdePopulation pop;
    pop.kernel = RdeKernel(model);
    pop.seed = seed;
    pop.renormalize = renormalize;
    pop.pool.resize(pool_size);
    const std::uint64_t key = derive_seed(seed, kRdeInitTag);
    for (std::size_t i = 0; i < pool_size; ++i) {
        Philox rng(key, i);
        pop.pool[i] = -std::log(rng.uniform_open0());
    }
    return pop;
}

namespace detail {

template <class Fill>
void fill_blocks(std::vector<double>& out, unsigned threads, Fill&& fill) {
    constexpr std::size_t kBlock = 1 << 14;
    const std::size_t blocks = (out.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t hi = std::min(out.size(), (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < hi; ++i) out[i] = fill(i);
    });
}

}  // namespace detail

/// Runs `rounds` population-dynamics rounds. Sample i of round r uses stream i
/// of derive_seed(seed, r), reading only the previous round's pool.
inline RdePopulation iterate(RdePopulation pop, std::uint64_t rounds, unsigned threads = 0) {
    if (pop.pool.size() < 2) throw InputError("population pool too small");
    std::vector<double> next(pop.pool.size());
    const std::uint64_t size = pop.pool.size();
    for (std::uint64_t r = 0; r < rounds; ++r) {
        const std::uint64_t key = derive_seed(pop.seed, pop.round + 1);
        const auto& prev = pop.pool;
        detail::fill_blocks(next, threads, [&](std::size_t i) {
            Philox rng(key, i);
            const DegreeType t = pop.kernel.draw_tail_type(rng);
            double s = 0.0;
            for (Degree k = 0; k < t.in_deg; ++k) s += prev[rng.below(size)];
            return s / t.out_deg;
        });
        const double mean = pairwise_sum(next) / static_cast<double>(size);
        pop.raw_means.push_back(mean);
        if (pop.renormalize)
            for (double& z : next) z /= mean;
        pop.pool.swap(next);
        ++pop.round;
    }
    return pop;
}

inline constexpr std::uint64_t kRdeSampleTag = 0x73616d70;  // "samp"

/// X = (n/m) * sum_{k=1}^{d^-} Z_k for a uniform vertex type; sample i uses
/// stream i of derive_seed(seed, kRdeSampleTag).
inline std::vector<double> sample_x(const RdePopulation& pop, std::size_t count, std::uint64_t seed,
                                    unsigned threads = 0) {
    std::vector<double> out(count);
    const std::uint64_t key = derive_seed(seed, kRdeSampleTag);
    const std::uint64_t size = pop.pool.size();
    const double scale = pop.kernel.n_over_m();
    detail::fill_blocks(out, threads, [&](std::size_t i) {
        Philox rng(key, i);
        const DegreeType t = pop.kernel.draw_vertex_type(rng);
        double s = 0.0;
        for (Degree k = 0; k < t.in_deg; ++k) s += pop.pool[rng.below(size)];
        return scale * s;
    });
    return out;
}

inline double pool_variance(std::span<const double> pool) { return summarize(pool).variance; }

struct TailFit {
    /// alpha_hat for the left tail (minus the slope), the Weibull-type exponent for the right tail.
    double exponent = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> bin_counts;
    std::vector<bool> bin_used;
    std::size_t samples = 0;
    std::size_t points = 0;
};

struct TailFitOptions {
    int bins = 10;
    std::uint64_t min_bin_count = 50;
    std::optional<std::pair<double, double>> window;
};

namespace detail {

inline TailFit fit_tail(std::vector<double> samples, const TailFitOptions& opt, bool left) {
    if (samples.size() < 2) throw FitRefused("too few samples for a tail fit");
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const std::size_t reserve = static_cast<std::size_t>(opt.bins) * opt.min_bin_count;
    TailFit fit;
    fit.samples = n;
    if (opt.window) {
        fit.window_lo = opt.window->first;
        fit.window_hi = opt.window->second;
    } else if (left) {
        if (reserve >= n) throw FitRefused("too few samples for the adaptive window");
        fit.window_lo = samples[reserve];
        fit.window_hi = quantile_sorted(samples, 0.30);
    } else {
        if (reserve >= n) throw FitRefused("too few samples for the adaptive window");
        fit.window_lo = quantile_sorted(samples, 0.70);
        fit.window_hi = samples[n - 1 - reserve];
    }
    if (!(fit.window_lo > 0.0) || !(fit.window_hi > fit.window_lo))
        throw FitRefused("empty or nonpositive fit window (degenerate sample?)");

    const double log_lo = std::log(fit.window_lo), log_hi = std::log(fit.window_hi);
    for (int j = 0; j <= opt.bins; ++j) fit.bin_edges.push_back(std::exp(log_lo + (log_hi - log_lo) * j / opt.bins));
    fit.bin_edges.front() = fit.window_lo;
    fit.bin_edges.back() = fit.window_hi;
    auto below = [&](double x) {  // #samples <= x
        return static_cast<double>(std::upper_bound(samples.begin(), samples.end(), x) - samples.begin());
    };
    std::vector<double> xs, ys;
    for (int j = 1; j <= opt.bins; ++j) {
        const double a = fit.bin_edges[j - 1], b = fit.bin_edges[j];
        const auto count = static_cast<std::uint64_t>(below(b) - below(a));
        fit.bin_counts.push_back(count);
        const bool use = count >= opt.min_bin_count;
        fit.bin_used.push_back(use);
        if (!use) continue;
        const double x = left ? b : a;
        const double f = below(x) / static_cast<double>(n);
        const double tail = left ? f : 1.0 - f;
        if (!(tail > 0.0 && tail < 1.0)) continue;
        xs.push_back(std::log(x));
        ys.push_back(std::log(-std::log(tail)));
    }
    fit.points = xs.size();
    if (xs.size() < 4) throw FitRefused("fewer than 4 usable bins in the fit window");
    const auto lf = least_squares(xs, ys);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r2 = lf.r2;
    fit.exponent = left ? -lf.slope : lf.slope;
    return fit;
}

}  // namespace detail

/// Regression of log(-log F(x)) on log x over the window; F(x) ~ exp(-c x^-alpha)
/// gives slope -alpha. Default window: from the order statistic leaving
/// bins * min_bin_count samples below it up to the 30th percentile.
inline TailFit fit_left_tail(std::vector<double> samples, const TailFitOptions& opt = {}) {
    return detail::fit_tail(std::move(samples), opt, true);
}

/// Regression of log(-log(1 - F(x))) on log x; exploratory diagnostics only.
/// Default window: 70th percentile up to the order statistic leaving
/// bins * min_bin_count samples above it.
inline TailFit fit_right_tail(std::vector<double> samples, const TailFitOptions& opt = {}) {
    return detail::fit_tail(std::move(samples), opt, false);
}

}  // namespace dcmlab
