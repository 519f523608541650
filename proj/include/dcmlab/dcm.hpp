#pragma once

// Directed configuration model sampler.
//
// Heads are laid out vertex by vertex (d_y^- copies of y, y ascending) and so
// are tails. The tail array is shuffled with the Philox stream (seed, stream)
// and paired positionally with the head array: position i yields the edge
// tails[i] -> heads[i]. A uniform shuffle makes the matching a uniform
// bijection, which is all the model asks for.

#include <cstdint>
#include <string>
#include <vector>

#include "dcmlab/degseq.hpp"
#include "dcmlab/error.hpp"
#include "dcmlab/multidigraph.hpp"
#include "dcmlab/rng.hpp"

namespace dcmlab {

inline MultiDigraph generate(const DegreeSequence& seq, std::uint64_t seed, std::uint64_t stream = 0) {
    const Vertex n = seq.n();
    std::vector<Vertex> tails;
    tails.reserve(seq.m());
    for (Vertex x = 0; x < n; ++x) tails.insert(tails.end(), seq.out_degree(x), x);

    Philox rng(seed, stream);
    shuffle(std::span<Vertex>(tails), rng);

    std::vector<Edge> edges;
    edges.reserve(seq.m());
    std::size_t pos = 0;
    for (Vertex y = 0; y < n; ++y)
        for (Degree k = 0; k < seq.in_degree(y); ++k) edges.emplace_back(tails[pos++], y);
    return MultiDigraph::from_edges(n, std::span<const Edge>(edges), seed);
}

/// Rejection sampler for simple digraphs: attempt a (0-based) is
/// generate(seq, seed, a); the first simple outcome is returned.
inline MultiDigraph generate_simple(const DegreeSequence& seq, std::uint64_t seed, std::uint64_t max_attempts = 10000) {
    for (std::uint64_t a = 0; a < max_attempts; ++a) {
        MultiDigraph g = generate(seq, seed, a);
        if (g.simple()) {
            g.set_attempts(a + 1);
            return g;
        }
    }
    throw SimpleGenerationError(max_attempts, "no simple digraph after " + std::to_string(max_attempts) +
                                                  " attempts; the degree sequence may be infeasible");
}

}  // namespace dcmlab
