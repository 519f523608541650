#pragma once

// Simple random walk operator P(y,x) = m(y,x) / d_y^+ and everything computed
// from it: stationary distribution, distributions after t steps, the in-degree
// weighted arrival sums Gamma_h, and total-variation cutoff profiles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcmlab/digraph.hpp"
#include "dcmlab/error.hpp"
#include "dcmlab/multidigraph.hpp"
#include "dcmlab/parallel.hpp"
#include "dcmlab/rng.hpp"
#include "dcmlab/stats.hpp"

namespace dcmlab {

class TransitionOperator {
public:
    explicit TransitionOperator(const MultiDigraph& g) : g_(&g), inv_out_(g.n()) {
        for (Vertex y = 0; y < g.n(); ++y) {
            if (g.out_degree(y) == 0) throw InputError("vertex " + std::to_string(y) + " has no out-edges");
            inv_out_[y] = 1.0 / g.out_degree(y);
        }
    }

    const MultiDigraph& graph() const { return *g_; }
    Vertex n() const { return g_->n(); }

    /// Row action out = mu P, pulled along in-edges so each entry is written once.
    void step(std::span<const double> mu, std::span<double> out) const {
        const auto offsets = g_->in_offsets();
        const auto sources = g_->in_sources();
        for (Vertex x = 0; x < n(); ++x) {
            double s = 0.0;
            for (std::uint64_t k = offsets[x]; k < offsets[x + 1]; ++k) s += mu[sources[k]] * inv_out_[sources[k]];
            out[x] = s;
        }
    }

    /// Column action out = P v, i.e. out(y) = average of v over the out-edges of y.
    void apply(std::span<const double> v, std::span<double> out) const {
        const auto offsets = g_->out_offsets();
        const auto targets = g_->out_targets();
        for (Vertex y = 0; y < n(); ++y) {
            double s = 0.0;
            for (std::uint64_t k = offsets[y]; k < offsets[y + 1]; ++k) s += v[targets[k]];
            out[y] = s * inv_out_[y];
        }
    }

private:
    const MultiDigraph* g_;
    std::vector<double> inv_out_;
};

inline std::vector<double> step_distribution(const TransitionOperator& p, std::span<const double> mu) {
    std::vector<double> out(p.n());
    p.step(mu, out);
    return out;
}

/// mu_in(x) = d_x^- / m.
inline std::vector<double> in_degree_distribution(const MultiDigraph& g) {
    std::vector<double> mu(g.n());
    const auto m = static_cast<double>(g.m());
    for (Vertex x = 0; x < g.n(); ++x) mu[x] = g.in_degree(x) / m;
    return mu;
}

inline double tv_distance(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw InputError("tv_distance on vectors of different length");
    return 0.5 * l1_distance(mu, nu);
}

enum class StationaryMethod { Power, Cesaro, Direct };

inline const char* to_string(StationaryMethod m) {
    switch (m) {
        case StationaryMethod::Power: return "power";
        case StationaryMethod::Cesaro: return "cesaro";
        case StationaryMethod::Direct: return "direct";
    }
    return "?";
}

struct StationaryResult {
    std::vector<double> pi;
    double residual = 0.0;  // || pi P - pi ||_1
    std::uint64_t iterations = 0;
    StationaryMethod method = StationaryMethod::Power;
    double pi_min = 0.0;
    double pi_max = 0.0;
    Vertex argmin = 0;
    Vertex argmax = 0;
};

struct SolveOptions {
    double tolerance = 1e-12;           // L1 successive difference
    double residual_tolerance = 1e-10;  // required || pi P - pi ||_1
    std::uint64_t max_iters = 200000;
    int oscillation_window = 8;
};

namespace detail {

inline void normalize(std::vector<double>& v) {
    const double s = compensated_sum(v);
    for (double& x : v) x /= s;
}

inline void finish(const TransitionOperator& p, StationaryResult& r) {
    normalize(r.pi);
    const auto next = step_distribution(p, r.pi);
    r.residual = l1_distance(next, r.pi);
    const auto [lo, hi] = std::minmax_element(r.pi.begin(), r.pi.end());
    r.argmin = static_cast<Vertex>(lo - r.pi.begin());
    r.argmax = static_cast<Vertex>(hi - r.pi.begin());
    r.pi_min = *lo;
    r.pi_max = *hi;
}

}  // namespace detail

/// Power iteration mu <- mu P from mu_in until the L1 change drops below the
/// tolerance. If the change fails to decrease over a full window (periodic or
/// nearly periodic chains), iteration continues on averaged pairs
/// mu <- (mu + mu P) / 2, which has the same fixed point and no periodicity.
inline StationaryResult solve(const TransitionOperator& p, const SolveOptions& opt = {}) {
    StationaryResult r;
    r.pi = in_degree_distribution(p.graph());
    std::vector<double> next(p.n());
    std::vector<double> history;
    double diff = 0.0;
    for (std::uint64_t it = 1; it <= opt.max_iters; ++it) {
        p.step(r.pi, next);
        if (r.method == StationaryMethod::Cesaro)
            for (Vertex x = 0; x < p.n(); ++x) next[x] = 0.5 * (next[x] + r.pi[x]);
        diff = l1_distance(next, r.pi);
        r.pi.swap(next);
        r.iterations = it;
        if (diff < opt.tolerance) {
            detail::finish(p, r);
            if (r.residual > opt.residual_tolerance) throw NonConvergence(it, r.residual);
            return r;
        }
        if (r.method == StationaryMethod::Power) {
            history.push_back(diff);
            const auto w = static_cast<std::size_t>(opt.oscillation_window);
            if (history.size() > w && diff >= history[history.size() - 1 - w]) r.method = StationaryMethod::Cesaro;
        }
    }
    throw NonConvergence(opt.max_iters, diff);
}

inline StationaryResult solve(const MultiDigraph& g, const SolveOptions& opt = {}) {
    return solve(TransitionOperator(g), opt);
}

inline constexpr Vertex kDirectSolveCap = 2000;

/// Dense Gaussian elimination with partial pivoting on pi (P - I) = 0, sum pi = 1.
inline StationaryResult direct_solve(const TransitionOperator& p) {
    const Vertex n = p.n();
    if (n > kDirectSolveCap) throw InputError("direct_solve limited to n <= 2000");
    const auto& g = p.graph();
    const auto conn = is_strongly_connected(g);
    if (!conn.strongly_connected) throw NotStronglyConnected(conn.unreachable_pair->first, conn.unreachable_pair->second);

    // Row x of A: sum_y pi(y) P(y,x) - pi(x) = 0; the last row is replaced by sum pi = 1.
    std::vector<double> a(std::size_t{n} * n, 0.0);
    std::vector<double> b(n, 0.0);
    auto at = [&](Vertex r, Vertex c) -> double& { return a[std::size_t{r} * n + c]; };
    for (Vertex y = 0; y < n; ++y)
        for (const Vertex x : g.out_neighbors(y)) at(x, y) += 1.0 / g.out_degree(y);
    for (Vertex x = 0; x < n; ++x) at(x, x) -= 1.0;
    for (Vertex c = 0; c < n; ++c) at(n - 1, c) = 1.0;
    b[n - 1] = 1.0;

    for (Vertex col = 0; col < n; ++col) {
        Vertex piv = col;
        for (Vertex r = col + 1; r < n; ++r)
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
        if (std::abs(at(piv, col)) < 1e-14) throw Error("stationary system is singular");
        if (piv != col) {
            for (Vertex c = 0; c < n; ++c) std::swap(at(piv, c), at(col, c));
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / at(col, col);
        for (Vertex r = col + 1; r < n; ++r) {
            const double f = at(r, col) * inv;
            if (f == 0.0) continue;
            for (Vertex c = col; c < n; ++c) at(r, c) -= f * at(col, c);
            b[r] -= f * b[col];
        }
    }
    StationaryResult res;
    res.method = StationaryMethod::Direct;
    res.pi.assign(n, 0.0);
    for (Vertex r = n; r-- > 0;) {
        double s = b[r];
        for (Vertex c = r + 1; c < n; ++c) s -= at(r, c) * res.pi[c];
        res.pi[r] = s / at(r, r);
    }
    detail::finish(p, res);
    return res;
}

/// lambda_t(y) = (1/n) sum_x P^t(x, y): t row steps from the uniform vector.
inline std::vector<double> lambda_t(const TransitionOperator& p, std::uint64_t t) {
    std::vector<double> mu(p.n(), 1.0 / p.n());
    std::vector<double> next(p.n());
    for (std::uint64_t s = 0; s < t; ++s) {
        p.step(mu, next);
        mu.swap(next);
    }
    return mu;
}

/// Gamma_h(y) = sum over z at exact distance h to y of d_z^- P^h(z, y).
inline double gamma_h(const TransitionOperator& p, Vertex y, int h) {
    const auto& g = p.graph();
    const auto layers = bfs_layers(g, y, Direction::In, h);
    std::vector<double> v(p.n(), 0.0), next(p.n());
    v[y] = 1.0;
    for (int s = 0; s < h; ++s) {
        p.apply(v, next);
        v.swap(next);
    }
    double total = 0.0;
    for (const Vertex z : layers.layers[static_cast<std::size_t>(h)]) total += g.in_degree(z) * v[z];
    return total;
}

struct CutoffProfile {
    std::vector<double> s_grid;
    std::vector<std::uint64_t> steps;  // floor(s * t_ent)
    std::vector<double> tv_values;     // max over sampled sources
    std::vector<Vertex> sources;
};

/// For each s, the worst total-variation distance to pi over sampled point-mass
/// sources after floor(s * t_ent) steps. Sources are drawn without replacement
/// from Philox (seed, 0); all n vertices are used when num_sources >= n.
inline CutoffProfile cutoff_profile(const TransitionOperator& p, std::span<const double> pi, double t_ent,
                                    std::span<const double> s_grid, std::uint32_t num_sources, std::uint64_t seed,
                                    unsigned threads = 0) {
    CutoffProfile prof;
    prof.s_grid.assign(s_grid.begin(), s_grid.end());
    for (const double s : s_grid) prof.steps.push_back(static_cast<std::uint64_t>(std::floor(s * t_ent)));
    const Vertex n = p.n();
    if (num_sources >= n) {
        for (Vertex v = 0; v < n; ++v) prof.sources.push_back(v);
    } else {
        std::vector<Vertex> all(n);
        for (Vertex v = 0; v < n; ++v) all[v] = v;
        Philox rng(seed, 0);
        for (std::uint32_t i = 0; i < num_sources; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(all[i], all[j]);
            prof.sources.push_back(all[i]);
        }
    }
    const std::uint64_t horizon = prof.steps.empty() ? 0 : *std::max_element(prof.steps.begin(), prof.steps.end());
    std::vector<std::vector<double>> tv(prof.sources.size(), std::vector<double>(s_grid.size(), 0.0));
    parallel_for(prof.sources.size(), threads, [&](std::size_t i) {
        std::vector<double> mu(n, 0.0), next(n);
        mu[prof.sources[i]] = 1.0;
        for (std::uint64_t t = 0;; ++t) {
            for (std::size_t k = 0; k < prof.steps.size(); ++k)
                if (prof.steps[k] == t) tv[i][k] = tv_distance(mu, pi);
            if (t == horizon) break;
            p.step(mu, next);
            mu.swap(next);
        }
    });
    prof.tv_values.assign(s_grid.size(), 0.0);
    for (const auto& row : tv)
        for (std::size_t k = 0; k < row.size(); ++k) prof.tv_values[k] = std::max(prof.tv_values[k], row[k]);
    return prof;
}

}  // namespace dcmlab
