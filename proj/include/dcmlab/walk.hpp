#pragma once

// Random-walk simulation on a MultiDigraph: cover times, hitting times,
// exact return profiles and no-visit tail probabilities.
//
// A step from y picks a uniform index into the out-slice of y, which realizes
// P(y,x) = m(y,x) / d_y^+ with one draw. Trial k of a call seeded with s uses
// the Philox stream (s, k), so results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcmlab/error.hpp"
#include "dcmlab/multidigraph.hpp"
#include "dcmlab/parallel.hpp"
#include "dcmlab/rng.hpp"
#include "dcmlab/stationary.hpp"
#include "dcmlab/stats.hpp"

namespace dcmlab {

/// 50 n log^2 n, at least 1000.
inline std::uint64_t default_step_cap(Vertex n) {
    const double ln = std::log(std::max<double>(n, 2.0));
    return std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(50.0 * n * ln * ln));
}

class Walker {
public:
    Walker(const MultiDigraph& g, std::uint64_t seed, std::uint64_t stream)
        : offsets_(g.out_offsets().data()), targets_(g.out_targets().data()), rng_(seed, stream) {}

    Vertex step(Vertex y) {
        const std::uint64_t lo = offsets_[y];
        const std::uint64_t deg = offsets_[y + 1] - lo;
        return targets_[lo + rng_.below(deg)];
    }

private:
    const std::uint64_t* offsets_;
    const Vertex* targets_;
    Philox rng_;
};

struct WalkStats {
    Vertex start = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::uint64_t step_cap = 0;
    std::vector<std::uint64_t> tau_cov;  // per trial; equals step_cap when censored
    std::vector<bool> censored;
    std::uint64_t censored_count = 0;
    /// Over uncensored trials; 95% normal-approximation interval mean -/+ 1.96 sd / sqrt(k).
    Summary summary;
};

namespace detail {

inline WalkStats summarize_trials(Vertex start, std::uint64_t seed, std::uint64_t cap, std::vector<std::uint64_t> times,
                                  std::vector<bool> censored) {
    WalkStats s;
    s.start = start;
    s.trials = times.size();
    s.seed = seed;
    s.step_cap = cap;
    std::vector<double> ok;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (censored[k])
            ++s.censored_count;
        else
            ok.push_back(static_cast<double>(times[k]));
    }
    s.summary = summarize(ok);
    s.tau_cov = std::move(times);
    s.censored = std::move(censored);
    return s;
}

}  // namespace detail

/// Per-trial cover times from `start`; trial k uses stream (seed, k).
inline WalkStats simulate_cover(const MultiDigraph& g, Vertex start, std::uint64_t trials, std::uint64_t seed,
                                std::optional<std::uint64_t> step_cap = std::nullopt, unsigned threads = 0) {
    if (start >= g.n()) throw InputError("walk start out of range");
    const std::uint64_t cap = step_cap.value_or(default_step_cap(g.n()));
    std::vector<std::uint64_t> times(trials, 0);
    std::vector<char> cens(trials, 0);
    parallel_for(trials, threads, [&](std::size_t k) {
        Walker w(g, seed, k);
        std::vector<std::uint64_t> seen((g.n() + 63) / 64, 0);
        auto mark = [&](Vertex v) {
            const std::uint64_t bit = 1ull << (v & 63);
            const bool fresh = !(seen[v >> 6] & bit);
            seen[v >> 6] |= bit;
            return fresh;
        };
        Vertex x = start;
        mark(x);
        Vertex remaining = g.n() - 1;
        std::uint64_t t = 0;
        while (remaining > 0 && t < cap) {
            x = w.step(x);
            ++t;
            if (mark(x)) --remaining;
        }
        times[k] = t;
        cens[k] = remaining > 0;
    });
    return detail::summarize_trials(start, seed, cap, std::move(times), std::vector<bool>(cens.begin(), cens.end()));
}

struct CoverEstimate {
    double t_cov = 0.0;  // max over starts of the mean cover time
    Vertex argmax_start = 0;
    std::vector<WalkStats> per_start;
    std::uint64_t censored_count = 0;
};

/// Start i of the list uses seed derive_seed(seed, i).
inline CoverEstimate estimate_tcov(const MultiDigraph& g, std::span<const Vertex> starts, std::uint64_t trials,
                                   std::uint64_t seed, std::optional<std::uint64_t> step_cap = std::nullopt,
                                   unsigned threads = 0) {
    CoverEstimate est;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        est.per_start.push_back(simulate_cover(g, starts[i], trials, derive_seed(seed, i), step_cap, threads));
        const auto& s = est.per_start.back();
        est.censored_count += s.censored_count;
        if (i == 0 || s.summary.mean > est.t_cov) {
            est.t_cov = s.summary.mean;
            est.argmax_start = starts[i];
        }
    }
    return est;
}

/// Monte Carlo hitting time H_target from start.
inline WalkStats hitting_time(const MultiDigraph& g, Vertex start, Vertex target, std::uint64_t trials,
                              std::uint64_t seed, std::optional<std::uint64_t> step_cap = std::nullopt,
                              unsigned threads = 0) {
    if (start >= g.n() || target >= g.n()) throw InputError("hitting_time vertex out of range");
    const std::uint64_t cap = step_cap.value_or(default_step_cap(g.n()));
    std::vector<std::uint64_t> times(trials, 0);
    std::vector<char> cens(trials, 0);
    parallel_for(trials, threads, [&](std::size_t k) {
        Walker w(g, seed, k);
        Vertex x = start;
        std::uint64_t t = 0;
        while (x != target && t < cap) {
            x = w.step(x);
            ++t;
        }
        times[k] = t;
        cens[k] = x != target;
    });
    return detail::summarize_trials(start, seed, cap, std::move(times), std::vector<bool>(cens.begin(), cens.end()));
}

struct ReturnProfile {
    Vertex y = 0;
    std::uint64_t horizon = 0;
    std::vector<double> p_return;  // P^t(y, y), t = 0..horizon
    double r1 = 0.0;               // sum of p_return
};

inline constexpr std::uint64_t kReturnHorizonCap = 10000;

/// Exact P^t(y,y) by repeated row steps from the point mass at y.
inline ReturnProfile return_profile(const TransitionOperator& p, Vertex y, std::uint64_t horizon) {
    if (horizon > kReturnHorizonCap) throw InputError("return_profile horizon above 10^4");
    if (y >= p.n()) throw InputError("return_profile vertex out of range");
    ReturnProfile r;
    r.y = y;
    r.horizon = horizon;
    std::vector<double> mu(p.n(), 0.0), next(p.n());
    mu[y] = 1.0;
    r.p_return.push_back(1.0);
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        p.step(mu, next);
        mu.swap(next);
        r.p_return.push_back(mu[y]);
    }
    r.r1 = compensated_sum(r.p_return);
    return r;
}

struct NoVisitTail {
    Vertex start = 0;
    Vertex y = 0;
    std::uint64_t horizon = 0;              // T
    std::vector<std::uint64_t> t_grid;      // reported grid (possibly truncated)
    std::vector<double> probability;        // estimate of P_start(X_s != y for all s in [T, t])
    std::vector<std::uint64_t> survivors;   // trials still unvisited at t
    std::uint64_t trials = 0;
    bool truncated = false;
    std::optional<std::string> warning;
    /// Fit log P = c - (t + 1) log(1 + p) over the reported grid.
    double rate = 0.0;  // fitted p
    double r2 = 0.0;
};

/// Monte Carlo no-visit probabilities. The event at t constrains X_s for
/// s in [T, t]; at t = T it is just X_T != y. Grid points whose survivor count
/// falls below min_survivors are dropped from the tail with a warning.
inline NoVisitTail no_visit_tail(const MultiDigraph& g, Vertex start, Vertex y, std::uint64_t horizon,
                                 std::vector<std::uint64_t> t_grid, std::uint64_t trials, std::uint64_t seed,
                                 std::uint64_t min_survivors = 30, unsigned threads = 0) {
    if (start >= g.n() || y >= g.n()) throw InputError("no_visit_tail vertex out of range");
    std::sort(t_grid.begin(), t_grid.end());
    if (t_grid.empty() || t_grid.front() < horizon) throw InputError("no_visit_tail grid must be non-empty and >= T");
    const std::uint64_t t_max = t_grid.back();
    // first_visit[k] = first s >= T with X_s = y, or t_max + 1 if none up to t_max.
    std::vector<std::uint64_t> first_visit(trials, t_max + 1);
    parallel_for(trials, threads, [&](std::size_t k) {
        Walker w(g, seed, k);
        Vertex x = start;
        for (std::uint64_t s = 0; s <= t_max; ++s) {
            if (s > 0) x = w.step(x);
            if (s >= horizon && x == y) {
                first_visit[k] = s;
                return;
            }
        }
    });
    NoVisitTail out;
    out.start = start;
    out.y = y;
    out.horizon = horizon;
    out.trials = trials;
    std::sort(first_visit.begin(), first_visit.end());
    for (const std::uint64_t t : t_grid) {
        const auto alive = static_cast<std::uint64_t>(first_visit.end() -
                                                      std::upper_bound(first_visit.begin(), first_visit.end(), t));
        if (alive < min_survivors) {
            out.truncated = true;
            out.warning = "tail grid truncated at t=" + std::to_string(t) + ": only " + std::to_string(alive) +
                          " surviving trials";
            break;
        }
        out.t_grid.push_back(t);
        out.survivors.push_back(alive);
        out.probability.push_back(static_cast<double>(alive) / static_cast<double>(trials));
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < out.t_grid.size(); ++i) {
        if (out.probability[i] <= 0.0) continue;
        xs.push_back(static_cast<double>(out.t_grid[i] + 1));
        ys.push_back(std::log(out.probability[i]));
    }
    if (xs.size() >= 2) {
        const auto fit = least_squares(xs, ys);
        out.rate = std::exp(-fit.slope) - 1.0;
        out.r2 = fit.r2;
    }
    return out;
}

}  // namespace dcmlab
