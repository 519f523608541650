#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcmlab/degseq.hpp"
#include "dcmlab/error.hpp"

namespace dcmlab {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

/// Directed multigraph in compressed adjacency form. Multiplicity is stored by
/// repetition: vertex x appears m(y,x) times in the out-slice of y. The
/// in-adjacency is always the transpose built by scanning sources in order.
class MultiDigraph {
public:
    MultiDigraph() = default;

    MultiDigraph(std::vector<std::uint64_t> out_offsets, std::vector<Vertex> out_targets, std::uint64_t seed = 0)
        : out_offsets_(std::move(out_offsets)), out_targets_(std::move(out_targets)), seed_(seed) {
        if (out_offsets_.empty() || out_offsets_.front() != 0 || out_offsets_.back() != out_targets_.size())
            throw InputError("inconsistent adjacency offsets");
        for (std::size_t i = 1; i < out_offsets_.size(); ++i)
            if (out_offsets_[i] < out_offsets_[i - 1]) throw InputError("adjacency offsets not monotone");
        for (const Vertex v : out_targets_)
            if (v >= n()) throw InputError("edge target " + std::to_string(v) + " out of range");
        build_transpose();
        simple_ = compute_simple();
    }

    /// Out-lists keep the order in which edges are listed.
    static MultiDigraph from_edges(Vertex n, std::span<const Edge> edges, std::uint64_t seed = 0) {
        std::vector<std::uint64_t> offsets(std::size_t{n} + 1, 0);
        for (const auto& [x, y] : edges) {
            if (x >= n || y >= n) throw InputError("edge endpoint out of range");
            ++offsets[x + 1];
        }
        for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
        std::vector<Vertex> targets(edges.size());
        std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
        for (const auto& [x, y] : edges) targets[cursor[x]++] = y;
        return MultiDigraph(std::move(offsets), std::move(targets), seed);
    }

    static MultiDigraph from_edges(Vertex n, std::initializer_list<Edge> edges) {
        const std::vector<Edge> v(edges);
        return from_edges(n, std::span<const Edge>(v));
    }

    Vertex n() const { return out_offsets_.empty() ? 0 : static_cast<Vertex>(out_offsets_.size() - 1); }
    std::uint64_t m() const { return out_targets_.size(); }
    std::uint64_t seed() const { return seed_; }
    bool simple() const { return simple_; }

    std::span<const Vertex> out_neighbors(Vertex x) const {
        return {out_targets_.data() + out_offsets_[x], out_targets_.data() + out_offsets_[x + 1]};
    }
    std::span<const Vertex> in_neighbors(Vertex x) const {
        return {in_sources_.data() + in_offsets_[x], in_sources_.data() + in_offsets_[x + 1]};
    }
    std::uint32_t out_degree(Vertex x) const { return static_cast<std::uint32_t>(out_offsets_[x + 1] - out_offsets_[x]); }
    std::uint32_t in_degree(Vertex x) const { return static_cast<std::uint32_t>(in_offsets_[x + 1] - in_offsets_[x]); }

    std::span<const std::uint64_t> out_offsets() const { return out_offsets_; }
    std::span<const Vertex> out_targets() const { return out_targets_; }
    std::span<const std::uint64_t> in_offsets() const { return in_offsets_; }
    std::span<const Vertex> in_sources() const { return in_sources_; }

    /// Number of parallel copies of (x, y).
    std::uint32_t multiplicity(Vertex x, Vertex y) const {
        const auto out = out_neighbors(x);
        return static_cast<std::uint32_t>(std::count(out.begin(), out.end(), y));
    }

    /// All edges in out-adjacency order.
    std::vector<Edge> edges() const {
        std::vector<Edge> e;
        e.reserve(m());
        for (Vertex x = 0; x < n(); ++x)
            for (const Vertex y : out_neighbors(x)) e.emplace_back(x, y);
        return e;
    }

    DegreeSequence degree_sequence(bool paper_mode = false) const {
        std::vector<Degree> din(n()), dout(n());
        for (Vertex x = 0; x < n(); ++x) {
            din[x] = static_cast<Degree>(in_degree(x));
            dout[x] = static_cast<Degree>(out_degree(x));
        }
        return DegreeSequence(std::move(din), std::move(dout), paper_mode);
    }

    /// Rejection attempts used to produce this graph (1 unless generated simple).
    std::uint64_t attempts() const { return attempts_; }
    void set_attempts(std::uint64_t a) { attempts_ = a; }

    /// Structural equality (ignores seed and attempt metadata).
    bool same_structure(const MultiDigraph& other) const {
        return out_offsets_ == other.out_offsets_ && out_targets_ == other.out_targets_;
    }

private:
    void build_transpose() {
        const Vertex count = n();
        in_offsets_.assign(std::size_t{count} + 1, 0);
        for (const Vertex y : out_targets_) ++in_offsets_[y + 1];
        for (std::size_t i = 1; i < in_offsets_.size(); ++i) in_offsets_[i] += in_offsets_[i - 1];
        in_sources_.resize(out_targets_.size());
        std::vector<std::uint64_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
        for (Vertex x = 0; x < count; ++x)
            for (const Vertex y : out_neighbors(x)) in_sources_[cursor[y]++] = x;
    }

    bool compute_simple() const {
        std::vector<Vertex> scratch;
        for (Vertex x = 0; x < n(); ++x) {
            const auto out = out_neighbors(x);
            scratch.assign(out.begin(), out.end());
            std::sort(scratch.begin(), scratch.end());
            if (std::adjacent_find(scratch.begin(), scratch.end()) != scratch.end()) return false;
            if (std::binary_search(scratch.begin(), scratch.end(), x)) return false;
        }
        return true;
    }

    std::vector<std::uint64_t> out_offsets_;
    std::vector<Vertex> out_targets_;
    std::vector<std::uint64_t> in_offsets_;
    std::vector<Vertex> in_sources_;
    std::uint64_t seed_ = 0;
    std::uint64_t attempts_ = 1;
    bool simple_ = true;
};

}  // namespace dcmlab
