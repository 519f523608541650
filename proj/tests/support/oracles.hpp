#pragma once

// Reference implementations used only by tests. Each one works from the edge
// list or from first principles and shares no code with the library beyond
// the MultiDigraph accessors.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include <boost/rational.hpp>

#include "dcmlab/multidigraph.hpp"
#include "dcmlab/rng.hpp"

namespace oracle {

using dcmlab::MultiDigraph;
using dcmlab::Vertex;
using Rational = boost::rational<std::int64_t>;

/// Dense row-stochastic matrix P(x,y) = m(x,y)/d_x^+.
inline std::vector<std::vector<double>> dense_transition(const MultiDigraph& g) {
    const Vertex n = g.n();
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    for (const auto& [x, y] : g.edges()) p[x][y] += 1.0 / g.out_degree(x);
    return p;
}

/// Solves A x = b by Gaussian elimination with partial pivoting (A dense, copied).
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0.0) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t r = 0; r < n; ++r) b[r] /= a[r][r];
    return b;
}

// ---------------------------------------------------------------------------
// Path enumeration

struct Neighborhood {
    std::vector<std::optional<int>> dist;  // shortest walk length, if <= depth
    std::multiset<std::pair<Vertex, Vertex>> edges;  // edges on walks of length <= depth, with multiplicity
    std::int64_t tree_excess = 0;
};

/// Enumerates every walk of length <= depth leaving the center (along reversed
/// edges for in = true). Each edge slot is kept once, with its multiplicity.
inline Neighborhood enumerate_neighborhood(const MultiDigraph& g, Vertex center, bool in, int depth) {
    Neighborhood nb;
    nb.dist.assign(g.n(), std::nullopt);
    const auto all = g.edges();
    std::set<std::size_t> used;  // edge indices lying on some walk
    std::function<void(Vertex, int)> walk = [&](Vertex v, int len) {
        if (!nb.dist[v] || *nb.dist[v] > len) nb.dist[v] = len;
        if (len == depth) return;
        for (std::size_t e = 0; e < all.size(); ++e) {
            const auto [a, b] = all[e];
            const Vertex from = in ? b : a;
            const Vertex to = in ? a : b;
            if (from != v) continue;
            used.insert(e);
            walk(to, len + 1);
        }
    };
    walk(center, 0);
    for (const auto e : used) nb.edges.insert(all[e]);
    std::int64_t vertices = 0;
    for (const auto& d : nb.dist) vertices += d.has_value();
    nb.tree_excess = 1 + static_cast<std::int64_t>(nb.edges.size()) - vertices;
    return nb;
}

/// Shortest directed x -> y walk length by enumerating walks of length < n.
inline std::optional<int> enumerate_distance(const MultiDigraph& g, Vertex x, Vertex y) {
    const auto nb = enumerate_neighborhood(g, x, false, static_cast<int>(g.n()) - 1);
    return nb.dist[y];
}

// ---------------------------------------------------------------------------
// Hitting and cover times

/// E_x[H_y] for every x from the absorption system (I - Q) h = 1.
inline std::vector<double> hitting_times(const MultiDigraph& g, Vertex target) {
    const Vertex n = g.n();
    const auto p = dense_transition(g);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 1.0);
    for (Vertex x = 0; x < n; ++x) {
        a[x][x] = 1.0;
        if (x == target) {
            b[x] = 0.0;
            continue;
        }
        for (Vertex y = 0; y < n; ++y)
            if (y != target) a[x][y] -= p[x][y];
    }
    return gauss_solve(a, b);
}

/// Exact E_x[tau_cov] from the chain on (visited set, position). Sets are
/// handled from the largest down; moves inside the current set form one
/// linear system per set.
inline double cover_time(const MultiDigraph& g, Vertex start) {
    const Vertex n = g.n();
    const auto p = dense_transition(g);
    const std::uint32_t full = (1u << n) - 1;
    std::vector<std::vector<double>> e(full + 1, std::vector<double>(n, 0.0));
    std::vector<std::uint32_t> sets(full);
    std::iota(sets.begin(), sets.end(), 1u);
    std::sort(sets.begin(), sets.end(), [](std::uint32_t a, std::uint32_t b) {
        return std::popcount(a) != std::popcount(b) ? std::popcount(a) > std::popcount(b) : a < b;
    });
    for (const std::uint32_t s : sets) {
        if (s == full) continue;
        std::vector<Vertex> members;
        for (Vertex v = 0; v < n; ++v)
            if (s >> v & 1u) members.push_back(v);
        const std::size_t k = members.size();
        std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
        std::vector<double> b(k, 1.0);
        for (std::size_t i = 0; i < k; ++i) {
            a[i][i] = 1.0;
            const Vertex v = members[i];
            for (Vertex u = 0; u < n; ++u) {
                if (p[v][u] == 0.0) continue;
                if (s >> u & 1u) {
                    const auto j = static_cast<std::size_t>(std::find(members.begin(), members.end(), u) - members.begin());
                    a[i][j] -= p[v][u];
                } else {
                    b[i] += p[v][u] * e[s | (1u << u)][u];
                }
            }
        }
        const auto sol = gauss_solve(a, b);
        for (std::size_t i = 0; i < k; ++i) e[s][members[i]] = sol[i];
    }
    return e[1u << start][start];
}

/// Spectral radius of P restricted to the complement of y (power iteration),
/// i.e. the per-step survival factor of the no-visit event.
inline double quasi_stationary_decay(const MultiDigraph& g, Vertex y, int iters = 20000) {
    const Vertex n = g.n();
    const auto p = dense_transition(g);
    std::vector<double> mu(n, 1.0 / (n - 1)), next(n);
    mu[y] = 0.0;
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (Vertex x = 0; x < n; ++x)
            for (Vertex z = 0; z < n; ++z)
                if (z != y) next[z] += mu[x] * p[x][z];
        const double s = std::accumulate(next.begin(), next.end(), 0.0);
        lambda = s;
        for (double& v : next) v /= s;
        mu.swap(next);
    }
    return lambda;
}

// ---------------------------------------------------------------------------
// Exact arithmetic

/// Gamma_h(y) in rationals: sum over z at in-distance exactly h of d_z^- P^h(z,y),
/// with P^h obtained by multiplying the exact matrix h times.
inline Rational gamma_h(const MultiDigraph& g, Vertex y, int h) {
    const Vertex n = g.n();
    std::vector<std::vector<Rational>> p(n, std::vector<Rational>(n, Rational(0)));
    for (const auto& [a, b] : g.edges()) p[a][b] += Rational(1, g.out_degree(a));
    // column v = P^t(., y)
    std::vector<Rational> v(n, Rational(0));
    v[y] = 1;
    for (int t = 0; t < h; ++t) {
        std::vector<Rational> next(n, Rational(0));
        for (Vertex x = 0; x < n; ++x)
            for (Vertex z = 0; z < n; ++z)
                if (p[x][z].numerator() != 0) next[x] += p[x][z] * v[z];
        v.swap(next);
    }
    const auto nb = enumerate_neighborhood(g, y, true, h);
    Rational total = 0;
    for (Vertex z = 0; z < n; ++z)
        if (nb.dist[z] && *nb.dist[z] == h) total += Rational(g.in_degree(z)) * v[z];
    return total;
}

/// m * (mu_in P^h)(y) in rationals.
inline Rational weighted_arrival(const MultiDigraph& g, Vertex y, int h) {
    const Vertex n = g.n();
    std::vector<Rational> mu(n);
    for (Vertex x = 0; x < n; ++x) mu[x] = Rational(g.in_degree(x));  // m * mu_in
    for (int t = 0; t < h; ++t) {
        std::vector<Rational> next(n, Rational(0));
        for (const auto& [a, b] : g.edges()) next[b] += mu[a] / Rational(g.out_degree(a));
        mu.swap(next);
    }
    return mu[y];
}

// ---------------------------------------------------------------------------
// Matchings

/// Exact law of the sorted edge multiset under a uniform tail/head bijection,
/// enumerating all m! permutations of the tail list.
inline std::map<std::vector<std::pair<Vertex, Vertex>>, double> matching_law(const std::vector<int>& d_minus,
                                                                            const std::vector<int>& d_plus) {
    std::vector<Vertex> tails, heads;
    for (Vertex x = 0; x < d_plus.size(); ++x) tails.insert(tails.end(), d_plus[x], x);
    for (Vertex y = 0; y < d_minus.size(); ++y) heads.insert(heads.end(), d_minus[y], y);
    std::vector<std::size_t> perm(tails.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::map<std::vector<std::pair<Vertex, Vertex>>, double> law;
    double total = 0.0;
    do {
        std::vector<std::pair<Vertex, Vertex>> e;
        for (std::size_t i = 0; i < heads.size(); ++i) e.emplace_back(tails[perm[i]], heads[i]);
        std::sort(e.begin(), e.end());
        law[e] += 1.0;
        total += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (auto& [k, v] : law) v /= total;
    return law;
}

/// Directed cycle 0 -> 1 -> ... -> n-1 -> 0.
inline MultiDigraph cycle(Vertex n) {
    std::vector<dcmlab::Edge> e;
    for (Vertex x = 0; x < n; ++x) e.emplace_back(x, (x + 1) % n);
    return MultiDigraph::from_edges(n, std::span<const dcmlab::Edge>(e));
}

/// Random strongly connected multigraph on n vertices: a Hamiltonian cycle
/// plus `extra` random edges (self-loops and repeats allowed).
inline MultiDigraph random_strong(Vertex n, std::uint32_t extra, std::uint64_t seed) {
    dcmlab::Philox rng(seed, 77);
    std::vector<Vertex> order(n);
    std::iota(order.begin(), order.end(), 0u);
    dcmlab::shuffle(std::span<Vertex>(order), rng);
    std::vector<dcmlab::Edge> e;
    for (Vertex i = 0; i < n; ++i) e.emplace_back(order[i], order[(i + 1) % n]);
    for (std::uint32_t k = 0; k < extra; ++k)
        e.emplace_back(static_cast<Vertex>(rng.below(n)), static_cast<Vertex>(rng.below(n)));
    return MultiDigraph::from_edges(n, std::span<const dcmlab::Edge>(e), seed);
}

/// Random multigraph with no structural guarantee (may be disconnected).
inline MultiDigraph random_any(Vertex n, std::uint32_t m, std::uint64_t seed) {
    dcmlab::Philox rng(seed, 91);
    std::vector<dcmlab::Edge> e;
    for (std::uint32_t k = 0; k < m; ++k)
        e.emplace_back(static_cast<Vertex>(rng.below(n)), static_cast<Vertex>(rng.below(n)));
    return MultiDigraph::from_edges(n, std::span<const dcmlab::Edge>(e), seed);
}

}  // namespace oracle
