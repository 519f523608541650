#pragma once

// Structural analysis of a MultiDigraph: breadth-first neighborhoods and tree
// excess, distances, diameter, strong connectivity, locally tree-like (LTL)
// vertices, small undirected cycles and vertex merging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcmlab/error.hpp"
#include "dcmlab/multidigraph.hpp"
#include "dcmlab/parallel.hpp"
#include "dcmlab/rng.hpp"
#include "dcmlab/stats.hpp"

namespace dcmlab {

enum class Direction { In, Out };

inline const char* to_string(Direction d) { return d == Direction::In ? "in" : "out"; }

/// Reusable BFS scratch space: distances stay -1 except for touched vertices,
/// so repeated local searches cost O(size of the ball), not O(n).
class BfsWorkspace {
public:
    explicit BfsWorkspace(Vertex n = 0) : dist_(n, -1) {}

    void ensure(Vertex n) {
        if (dist_.size() < n) dist_.assign(n, -1);
    }
    void reset() {
        for (const Vertex v : touched_) dist_[v] = -1;
        touched_.clear();
    }
    std::int32_t dist(Vertex v) const { return dist_[v]; }
    void set(Vertex v, std::int32_t d) {
        if (dist_[v] < 0) touched_.push_back(v);
        dist_[v] = d;
    }
    const std::vector<Vertex>& touched() const { return touched_; }

private:
    std::vector<std::int32_t> dist_;
    std::vector<Vertex> touched_;
};

struct NeighborhoodLayers {
    Vertex center = 0;
    Direction direction = Direction::In;
    int depth = 0;
    /// layers[t] = vertices at exact distance t (to the center for In, from it for Out), t = 0..depth.
    std::vector<std::vector<Vertex>> layers;
    /// Edges on directed paths of length <= depth ending (In) or starting (Out) at the center,
    /// counted with multiplicity: all in-edges (resp. out-edges) of vertices at distance < depth.
    std::uint64_t edge_count = 0;
    std::uint64_t vertex_count = 0;
    /// 1 + |E| - |V|; 0 iff the neighborhood is a directed tree.
    std::int64_t tree_excess = 0;
};

inline NeighborhoodLayers bfs_layers(const MultiDigraph& g, Vertex center, Direction dir, int depth,
                                     BfsWorkspace* workspace = nullptr) {
    if (center >= g.n()) throw InputError("bfs center out of range");
    if (depth < 0) throw InputError("negative bfs depth");
    BfsWorkspace local;
    BfsWorkspace& ws = workspace ? *workspace : local;
    ws.ensure(g.n());
    ws.reset();

    NeighborhoodLayers out;
    out.center = center;
    out.direction = dir;
    out.depth = depth;
    out.layers.assign(static_cast<std::size_t>(depth) + 1, {});
    out.layers[0].push_back(center);
    ws.set(center, 0);
    for (int t = 0; t < depth; ++t) {
        for (const Vertex v : out.layers[t]) {
            const auto nbrs = dir == Direction::In ? g.in_neighbors(v) : g.out_neighbors(v);
            out.edge_count += nbrs.size();
            for (const Vertex u : nbrs) {
                if (ws.dist(u) < 0) {
                    ws.set(u, t + 1);
                    out.layers[t + 1].push_back(u);
                }
            }
        }
    }
    for (const auto& layer : out.layers) out.vertex_count += layer.size();
    out.tree_excess = 1 + static_cast<std::int64_t>(out.edge_count) - static_cast<std::int64_t>(out.vertex_count);
    return out;
}

struct DistanceReport {
    Vertex source = 0;
    Vertex target = 0;
    std::optional<std::uint32_t> distance;  // empty when unreachable
};

/// Full single-source BFS; dist[v] = -1 when unreachable.
inline void bfs_distances(const MultiDigraph& g, Vertex source, Direction dir, std::vector<std::int32_t>& dist,
                          std::vector<Vertex>& queue) {
    dist.assign(g.n(), -1);
    queue.clear();
    queue.push_back(source);
    dist[source] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const Vertex v = queue[head];
        const auto nbrs = dir == Direction::Out ? g.out_neighbors(v) : g.in_neighbors(v);
        for (const Vertex u : nbrs) {
            if (dist[u] < 0) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
}

inline DistanceReport distance(const MultiDigraph& g, Vertex x, Vertex y) {
    if (x >= g.n() || y >= g.n()) throw InputError("distance endpoint out of range");
    DistanceReport r{x, y, std::nullopt};
    if (x == y) {
        r.distance = 0;
        return r;
    }
    std::vector<std::int32_t> dist(g.n(), -1);
    std::vector<Vertex> queue{x};
    dist[x] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const Vertex v = queue[head];
        for (const Vertex u : g.out_neighbors(v)) {
            if (dist[u] >= 0) continue;
            dist[u] = dist[v] + 1;
            if (u == y) {
                r.distance = static_cast<std::uint32_t>(dist[u]);
                return r;
            }
            queue.push_back(u);
        }
    }
    return r;
}

struct Connectivity {
    bool strongly_connected = true;
    /// On failure: an ordered pair (from, to) with no directed path from -> to.
    std::optional<Edge> unreachable_pair;
};

/// Forward and reverse reachability from vertex 0.
inline Connectivity is_strongly_connected(const MultiDigraph& g) {
    Connectivity c;
    if (g.n() <= 1) return c;
    std::vector<std::int32_t> dist;
    std::vector<Vertex> queue;
    bfs_distances(g, 0, Direction::Out, dist, queue);
    for (Vertex v = 0; v < g.n(); ++v) {
        if (dist[v] < 0) {
            c.strongly_connected = false;
            c.unreachable_pair = Edge{0, v};
            return c;
        }
    }
    bfs_distances(g, 0, Direction::In, dist, queue);
    for (Vertex v = 0; v < g.n(); ++v) {
        if (dist[v] < 0) {
            c.strongly_connected = false;
            c.unreachable_pair = Edge{v, 0};
            return c;
        }
    }
    return c;
}

inline constexpr Vertex kDefaultDiameterCap = 20000;

/// max over ordered pairs x != y of d(x, y), by BFS from every source.
inline std::uint32_t diameter_exact(const MultiDigraph& g, Vertex cap = kDefaultDiameterCap, unsigned threads = 0) {
    if (g.n() > cap)
        throw InputError("exact diameter refused for n=" + std::to_string(g.n()) + " above cap " +
                         std::to_string(cap) + "; use diameter_sampled");
    const auto conn = is_strongly_connected(g);
    if (!conn.strongly_connected) throw NotStronglyConnected(conn.unreachable_pair->first, conn.unreachable_pair->second);
    constexpr Vertex kBlock = 64;
    const std::size_t blocks = (g.n() + kBlock - 1) / kBlock;
    std::vector<std::uint32_t> block_max(blocks, 0);
    parallel_for(blocks, threads, [&](std::size_t b) {
        std::vector<std::int32_t> dist;
        std::vector<Vertex> queue;
        const Vertex lo = static_cast<Vertex>(b * kBlock);
        const Vertex hi = std::min<Vertex>(g.n(), lo + kBlock);
        std::uint32_t best = 0;
        for (Vertex s = lo; s < hi; ++s) {
            bfs_distances(g, s, Direction::Out, dist, queue);
            best = std::max(best, static_cast<std::uint32_t>(dist[queue.back()]));
        }
        block_max[b] = best;
    });
    return *std::max_element(block_max.begin(), block_max.end());
}

struct SampledDistances {
    std::vector<DistanceReport> samples;
    std::uint64_t unreachable = 0;
    double mean = 0.0;  // over reachable pairs
    std::uint32_t max = 0;
    double q01 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q99 = 0.0;
};

/// Distances of num_pairs uniformly sampled ordered pairs x != y (Philox stream
/// (seed, 0)). When num_pairs >= n(n-1) every ordered pair is enumerated instead.
inline SampledDistances diameter_sampled(const MultiDigraph& g, std::uint64_t num_pairs, std::uint64_t seed,
                                         unsigned threads = 0) {
    const std::uint64_t n = g.n();
    SampledDistances out;
    if (n < 2) return out;
    if (num_pairs >= n * (n - 1)) {
        for (Vertex x = 0; x < n; ++x)
            for (Vertex y = 0; y < n; ++y)
                if (x != y) out.samples.push_back({x, y, std::nullopt});
    } else {
        Philox rng(seed, 0);
        out.samples.reserve(num_pairs);
        for (std::uint64_t i = 0; i < num_pairs; ++i) {
            const auto x = static_cast<Vertex>(rng.below(n));
            auto y = static_cast<Vertex>(rng.below(n - 1));
            if (y >= x) ++y;
            out.samples.push_back({x, y, std::nullopt});
        }
    }
    std::vector<std::size_t> order(out.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.samples[a].source < out.samples[b].source; });
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // ranges in `order` sharing a source
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && out.samples[order[j]].source == out.samples[order[i]].source) ++j;
        groups.emplace_back(i, j);
        i = j;
    }
    parallel_for(groups.size(), threads, [&](std::size_t gi) {
        std::vector<std::int32_t> dist;
        std::vector<Vertex> queue;
        const auto [lo, hi] = groups[gi];
        bfs_distances(g, out.samples[order[lo]].source, Direction::Out, dist, queue);
        for (std::size_t k = lo; k < hi; ++k) {
            auto& s = out.samples[order[k]];
            if (dist[s.target] >= 0) s.distance = static_cast<std::uint32_t>(dist[s.target]);
        }
    });
    std::vector<double> reachable;
    for (const auto& s : out.samples) {
        if (!s.distance) {
            ++out.unreachable;
            continue;
        }
        reachable.push_back(*s.distance);
        out.max = std::max(out.max, *s.distance);
    }
    if (!reachable.empty()) {
        out.mean = pairwise_sum(reachable) / static_cast<double>(reachable.size());
        std::sort(reachable.begin(), reachable.end());
        out.q01 = quantile_sorted(reachable, 0.01);
        out.q05 = quantile_sorted(reachable, 0.05);
        out.q50 = quantile_sorted(reachable, 0.50);
        out.q95 = quantile_sorted(reachable, 0.95);
        out.q99 = quantile_sorted(reachable, 0.99);
    }
    return out;
}

/// Locally tree-like: in- and out-neighborhoods to depth theta are directed trees
/// and share no vertex other than v.
inline bool is_ltl(const MultiDigraph& g, Vertex v, int theta, BfsWorkspace& ws_in, BfsWorkspace& ws_out) {
    const auto in = bfs_layers(g, v, Direction::In, theta, &ws_in);
    if (in.tree_excess != 0) return false;
    const auto out = bfs_layers(g, v, Direction::Out, theta, &ws_out);
    if (out.tree_excess != 0) return false;
    for (const Vertex u : ws_out.touched())
        if (u != v && ws_in.dist(u) >= 0) return false;
    return true;
}

inline bool is_ltl(const MultiDigraph& g, Vertex v, int theta) {
    BfsWorkspace a(g.n()), b(g.n());
    return is_ltl(g, v, theta, a, b);
}

struct LtlPartition {
    std::vector<Vertex> ltl;      // V1
    std::vector<Vertex> non_ltl;  // V2
};

inline LtlPartition classify_ltl(const MultiDigraph& g, int theta) {
    LtlPartition p;
    BfsWorkspace a(g.n()), b(g.n());
    for (Vertex v = 0; v < g.n(); ++v) (is_ltl(g, v, theta, a, b) ? p.ltl : p.non_ltl).push_back(v);
    return p;
}

struct SmallCycleReport {
    int max_length = 0;
    /// Canonical vertex cycles: rotation starting at the smallest vertex, oriented
    /// so the second vertex is smaller than the last. Length 1 = self-loop,
    /// length 2 = two or more edges joining the same pair.
    std::vector<std::vector<Vertex>> cycles;
    /// Smallest undirected distance between vertices of two distinct cycles.
    std::optional<std::uint32_t> min_distance;
};

namespace detail {

/// Undirected simple projection (no self-loops, neighbors sorted and unique)
/// plus the number of edges joining each unordered pair.
struct UndirectedProjection {
    std::vector<std::vector<Vertex>> adj;
    std::vector<std::vector<std::uint32_t>> weight;
};

inline UndirectedProjection project(const MultiDigraph& g) {
    UndirectedProjection p;
    p.adj.resize(g.n());
    p.weight.resize(g.n());
    std::vector<Vertex> all;
    for (Vertex v = 0; v < g.n(); ++v) {
        all.clear();
        for (const Vertex u : g.out_neighbors(v))
            if (u != v) all.push_back(u);
        for (const Vertex u : g.in_neighbors(v))
            if (u != v) all.push_back(u);
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size();) {
            std::size_t j = i;
            while (j < all.size() && all[j] == all[i]) ++j;
            p.adj[v].push_back(all[i]);
            p.weight[v].push_back(static_cast<std::uint32_t>(j - i));
            i = j;
        }
    }
    return p;
}

}  // namespace detail

/// Enumerates undirected simple cycles of length <= 3*theta in the undirected
/// projection. Refuses when Delta^(3 theta) * n exceeds work_cap.
inline SmallCycleReport count_small_cycles(const MultiDigraph& g, int theta, double work_cap = 1e9) {
    SmallCycleReport rep;
    rep.max_length = 3 * theta;
    const Vertex n = g.n();
    std::uint32_t delta = 1;
    for (Vertex v = 0; v < n; ++v) delta = std::max({delta, g.in_degree(v), g.out_degree(v)});
    const double work = std::pow(static_cast<double>(delta), rep.max_length) * n;
    if (work > work_cap)
        throw InputError("small-cycle enumeration refused: estimated work " + std::to_string(work) + " exceeds cap");

    const auto proj = detail::project(g);
    for (Vertex v = 0; v < n; ++v)
        if (g.multiplicity(v, v) > 0) rep.cycles.push_back({v});
    if (rep.max_length >= 2)
        for (Vertex v = 0; v < n; ++v)
            for (std::size_t i = 0; i < proj.adj[v].size(); ++i)
                if (proj.adj[v][i] > v && proj.weight[v][i] >= 2) rep.cycles.push_back({v, proj.adj[v][i]});

    // Cycles of length >= 3 rooted at their smallest vertex s; every cycle is
    // met twice (once per orientation), keep the one with path[1] < path.back().
    std::vector<Vertex> path;
    std::vector<char> on_path(n, 0);
    auto dfs = [&](auto&& self, Vertex s, Vertex v) -> void {
        for (const Vertex u : proj.adj[v]) {
            if (u == s && path.size() >= 3 && path[1] < path.back()) rep.cycles.push_back(path);
            if (u <= s || on_path[u] || static_cast<int>(path.size()) >= rep.max_length) continue;
            path.push_back(u);
            on_path[u] = 1;
            self(self, s, u);
            on_path[u] = 0;
            path.pop_back();
        }
    };
    if (rep.max_length >= 3) {
        for (Vertex s = 0; s < n; ++s) {
            path.assign(1, s);
            on_path[s] = 1;
            dfs(dfs, s, s);
            on_path[s] = 0;
        }
    }
    std::sort(rep.cycles.begin(), rep.cycles.end());

    if (rep.cycles.size() >= 2) {
        std::vector<std::vector<std::uint32_t>> owner(n);
        for (std::uint32_t c = 0; c < rep.cycles.size(); ++c)
            for (const Vertex v : rep.cycles[c]) owner[v].push_back(c);
        std::vector<std::int32_t> dist(n, -1);
        std::vector<Vertex> queue;
        std::uint32_t best = UINT32_MAX;
        for (std::uint32_t c = 0; c < rep.cycles.size(); ++c) {
            for (const Vertex v : queue) dist[v] = -1;
            queue.clear();
            for (const Vertex v : rep.cycles[c]) {
                dist[v] = 0;
                queue.push_back(v);
            }
            // Stop at the first level that reaches another cycle.
            std::optional<std::uint32_t> found;
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const Vertex v = queue[head];
                if (found && static_cast<std::uint32_t>(dist[v]) > *found) break;
                if (static_cast<std::uint32_t>(dist[v]) >= best) break;
                if (std::any_of(owner[v].begin(), owner[v].end(), [&](std::uint32_t o) { return o != c; })) {
                    found = static_cast<std::uint32_t>(dist[v]);
                    break;
                }
                for (const Vertex u : proj.adj[v]) {
                    if (dist[u] < 0) {
                        dist[u] = dist[v] + 1;
                        queue.push_back(u);
                    }
                }
            }
            if (found) best = std::min(best, *found);
        }
        for (const Vertex v : queue) dist[v] = -1;
        if (best != UINT32_MAX) rep.min_distance = best;
    }
    return rep;
}

struct MergeResult {
    MultiDigraph graph;
    /// relabel[v] = vertex of the merged graph that v maps to.
    std::vector<Vertex> relabel;
    Vertex merged = 0;
};

/// Merges y and y_prime into one vertex placed at index min(y, y_prime); the
/// other indices are compacted in order. The merged vertex's out-list is the
/// out-list of y followed by that of y_prime, so degrees add and m is unchanged.
inline MergeResult merge_vertices(const MultiDigraph& g, Vertex y, Vertex y_prime) {
    if (y == y_prime) throw InputError("cannot merge a vertex with itself");
    if (y >= g.n() || y_prime >= g.n()) throw InputError("merge vertex out of range");
    const Vertex keep = std::min(y, y_prime);
    const Vertex drop = std::max(y, y_prime);
    MergeResult r;
    r.merged = keep;
    r.relabel.resize(g.n());
    for (Vertex v = 0; v < g.n(); ++v) r.relabel[v] = v == drop ? keep : (v > drop ? v - 1 : v);

    std::vector<Edge> edges;
    edges.reserve(g.m());
    for (Vertex v = 0; v < g.n(); ++v) {
        if (v == drop) continue;
        if (v == keep) {
            for (const Vertex u : g.out_neighbors(y)) edges.emplace_back(keep, r.relabel[u]);
            for (const Vertex u : g.out_neighbors(y_prime)) edges.emplace_back(keep, r.relabel[u]);
        } else {
            for (const Vertex u : g.out_neighbors(v)) edges.emplace_back(r.relabel[v], r.relabel[u]);
        }
    }
    r.graph = MultiDigraph::from_edges(g.n() - 1, std::span<const Edge>(edges), g.seed());
    return r;
}

}  // namespace dcmlab
