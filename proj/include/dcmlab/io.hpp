#pragma once

// File formats: model JSON, binary and text graph dumps, stationary vectors,
// pool snapshots, and the CSV/JSON reports written by the CLI.
//
// Binary layouts are little-endian with a 4-byte magic and a u32 version.
// Checksums are 64-bit FNV-1a.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmlab/degseq.hpp"
#include "dcmlab/digraph.hpp"
#include "dcmlab/error.hpp"
#include "dcmlab/multidigraph.hpp"
#include "dcmlab/rde.hpp"
#include "dcmlab/stationary.hpp"
#include "dcmlab/walk.hpp"

namespace dcmlab {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline constexpr int kModelSchemaVersion = 1;

/// Shortest round-trip text for a double ("%.17g").
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Fnv1a {
public:
    void add(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001B3ull;
        }
    }
    template <class T>
    void add_value(T v) {
        add(&v, sizeof v);
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ull;
};

// ---------------------------------------------------------------------------
// Model files
//
// {"schema": 1,
//  "types": [{"in": 2, "out": 3, "fraction": "0.5"}, ...],
//  "linear": [[2, 3], [3, 2]],           optional, default: every type
//  "sublinear": [{"in": 4, "out": 4, "exponent": 0.5}],   optional
//  "alpha_d": {"2": 1.0}}                optional

inline DegreeModel parse_model(const nlohmann::json& j) {
    try {
        if (j.contains("schema") && j.at("schema").get<int>() != kModelSchemaVersion)
            throw InputError("unsupported model schema " + j.at("schema").dump());
        DegreeModel model;
        for (const auto& t : j.at("types")) {
            DegreeModel::Entry e;
            e.type.in_deg = t.at("in").get<Degree>();
            e.type.out_deg = t.at("out").get<Degree>();
            const auto& f = t.at("fraction");
            e.fraction = f.is_string() ? Fraction::parse(f.get<std::string>()) : Fraction::parse(f.dump());
            model.entries.push_back(e);
        }
        if (j.contains("linear")) {
            for (const auto& t : j.at("linear"))
                model.linear_types.push_back({t.at(0).get<Degree>(), t.at(1).get<Degree>()});
        } else {
            for (const auto& e : model.entries) model.linear_types.push_back(e.type);
        }
        if (j.contains("sublinear"))
            for (const auto& s : j.at("sublinear"))
                model.sublinear_exponents[{s.at("in").get<Degree>(), s.at("out").get<Degree>()}] =
                    s.at("exponent").get<double>();
        if (j.contains("alpha_d"))
            for (const auto& [k, v] : j.at("alpha_d").items())
                model.alpha_d[static_cast<Degree>(std::stoul(k))] = v.get<double>();
        model.validate(false);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model file: ") + e.what());
    }
}

inline DegreeModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("model file " + path + " is not valid JSON: " + e.what());
    }
    return parse_model(j);
}

inline nlohmann::json model_to_json(const DegreeModel& model) {
    nlohmann::json j;
    j["schema"] = kModelSchemaVersion;
    j["types"] = nlohmann::json::array();
    for (const auto& e : model.entries)
        j["types"].push_back({{"in", e.type.in_deg},
                              {"out", e.type.out_deg},
                              {"fraction", std::to_string(e.fraction.num) + "/" + std::to_string(e.fraction.den)}});
    j["linear"] = nlohmann::json::array();
    for (const auto& t : model.linear_types) j["linear"].push_back({t.in_deg, t.out_deg});
    return j;
}

// ---------------------------------------------------------------------------
// Binary helpers

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw InputError("truncated binary file");
    return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], std::uint32_t version) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0) throw InputError(std::string("bad magic, expected ") + magic);
    const auto v = get<std::uint32_t>(in);
    if (v != version) throw InputError("unsupported binary version " + std::to_string(v));
}

}  // namespace detail

/// FNV-1a over the (in, out) degree pairs as little-endian u16.
inline std::uint64_t degree_checksum(const MultiDigraph& g) {
    Fnv1a h;
    for (Vertex x = 0; x < g.n(); ++x) {
        h.add_value(static_cast<std::uint16_t>(g.in_degree(x)));
        h.add_value(static_cast<std::uint16_t>(g.out_degree(x)));
    }
    return h.value();
}

// Graph dump v1: "DCMG" u32 version | u64 n | u64 m | u64 seed | u64 degree checksum
//                | u64 offsets[n+1] | u32 targets[m]
inline constexpr std::uint32_t kGraphDumpVersion = 1;

inline void write_graph_binary(std::ostream& out, const MultiDigraph& g) {
    out.write("DCMG", 4);
    detail::put<std::uint32_t>(out, kGraphDumpVersion);
    detail::put<std::uint64_t>(out, g.n());
    detail::put<std::uint64_t>(out, g.m());
    detail::put<std::uint64_t>(out, g.seed());
    detail::put<std::uint64_t>(out, degree_checksum(g));
    for (const auto o : g.out_offsets()) detail::put<std::uint64_t>(out, o);
    out.write(reinterpret_cast<const char*>(g.out_targets().data()),
              static_cast<std::streamsize>(g.m() * sizeof(Vertex)));
}

inline MultiDigraph read_graph_binary(std::istream& in) {
    detail::expect_magic(in, "DCMG", kGraphDumpVersion);
    const auto n = detail::get<std::uint64_t>(in);
    const auto m = detail::get<std::uint64_t>(in);
    const auto seed = detail::get<std::uint64_t>(in);
    const auto checksum = detail::get<std::uint64_t>(in);
    if (n > 0xFFFFFFFFull) throw InputError("graph dump: n too large");
    std::vector<std::uint64_t> offsets(n + 1);
    for (auto& o : offsets) o = detail::get<std::uint64_t>(in);
    std::vector<Vertex> targets(m);
    in.read(reinterpret_cast<char*>(targets.data()), static_cast<std::streamsize>(m * sizeof(Vertex)));
    if (!in) throw InputError("truncated graph dump");
    MultiDigraph g(std::move(offsets), std::move(targets), seed);
    if (degree_checksum(g) != checksum) throw InputError("graph dump: degree checksum mismatch");
    return g;
}

/// Text edge list: "# dcmlab edges n=<n> m=<m> seed=<seed>" then one "x y" line per
/// edge in out-adjacency order (multiplicity by repetition).
inline void write_edge_list(std::ostream& out, const MultiDigraph& g) {
    out << "# dcmlab edges n=" << g.n() << " m=" << g.m() << " seed=" << g.seed() << "\n";
    for (Vertex x = 0; x < g.n(); ++x)
        for (const Vertex y : g.out_neighbors(x)) out << x << ' ' << y << '\n';
}

inline MultiDigraph read_edge_list(std::istream& in) {
    std::string header;
    std::getline(in, header);
    unsigned long long n = 0, m = 0, seed = 0;
    if (std::sscanf(header.c_str(), "# dcmlab edges n=%llu m=%llu seed=%llu", &n, &m, &seed) != 3)
        throw InputError("edge list: missing header line");
    std::vector<Edge> edges;
    edges.reserve(m);
    unsigned long long x = 0, y = 0;
    while (in >> x >> y) edges.emplace_back(static_cast<Vertex>(x), static_cast<Vertex>(y));
    if (edges.size() != m) throw InputError("edge list: header says m=" + std::to_string(m) + " but found " +
                                            std::to_string(edges.size()) + " edges");
    return MultiDigraph::from_edges(static_cast<Vertex>(n), std::span<const Edge>(edges), seed);
}

// ---------------------------------------------------------------------------
// Stationary vectors: "DCMP" u32 version | u64 n | f64 pi[n] | u64 fnv1a(pi bytes)

inline constexpr std::uint32_t kPiDumpVersion = 1;

inline void write_pi_binary(std::ostream& out, std::span<const double> pi) {
    out.write("DCMP", 4);
    detail::put<std::uint32_t>(out, kPiDumpVersion);
    detail::put<std::uint64_t>(out, pi.size());
    out.write(reinterpret_cast<const char*>(pi.data()), static_cast<std::streamsize>(pi.size_bytes()));
    Fnv1a h;
    h.add(pi.data(), pi.size_bytes());
    detail::put<std::uint64_t>(out, h.value());
}

inline std::vector<double> read_pi_binary(std::istream& in) {
    detail::expect_magic(in, "DCMP", kPiDumpVersion);
    const auto n = detail::get<std::uint64_t>(in);
    std::vector<double> pi(n);
    in.read(reinterpret_cast<char*>(pi.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw InputError("truncated pi dump");
    Fnv1a h;
    h.add(pi.data(), n * sizeof(double));
    if (detail::get<std::uint64_t>(in) != h.value()) throw InputError("pi dump: checksum mismatch");
    return pi;
}

inline void write_pi_csv(std::ostream& out, std::span<const double> pi) {
    out << "vertex,pi\n";
    for (std::size_t x = 0; x < pi.size(); ++x) out << x << ',' << format_double(pi[x]) << '\n';
}

// ---------------------------------------------------------------------------
// Pool snapshots: "DCMR" u32 version | u64 round | u64 seed | u64 size | f64 pool[size] | u64 fnv1a

inline constexpr std::uint32_t kPoolDumpVersion = 1;

inline void write_pool_binary(std::ostream& out, const RdePopulation& pop) {
    out.write("DCMR", 4);
    detail::put<std::uint32_t>(out, kPoolDumpVersion);
    detail::put<std::uint64_t>(out, pop.round);
    detail::put<std::uint64_t>(out, pop.seed);
    detail::put<std::uint64_t>(out, pop.pool.size());
    out.write(reinterpret_cast<const char*>(pop.pool.data()),
              static_cast<std::streamsize>(pop.pool.size() * sizeof(double)));
    Fnv1a h;
    h.add(pop.pool.data(), pop.pool.size() * sizeof(double));
    detail::put<std::uint64_t>(out, h.value());
}

struct PoolSnapshot {
    std::uint64_t round = 0;
    std::uint64_t seed = 0;
    std::vector<double> pool;
};

inline PoolSnapshot read_pool_binary(std::istream& in) {
    detail::expect_magic(in, "DCMR", kPoolDumpVersion);
    PoolSnapshot s;
    s.round = detail::get<std::uint64_t>(in);
    s.seed = detail::get<std::uint64_t>(in);
    const auto size = detail::get<std::uint64_t>(in);
    s.pool.resize(size);
    in.read(reinterpret_cast<char*>(s.pool.data()), static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw InputError("truncated pool dump");
    Fnv1a h;
    h.add(s.pool.data(), size * sizeof(double));
    if (detail::get<std::uint64_t>(in) != h.value()) throw InputError("pool dump: checksum mismatch");
    return s;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json layers_to_json(const NeighborhoodLayers& l) {
    nlohmann::json j;
    j["center"] = l.center;
    j["direction"] = to_string(l.direction);
    j["depth"] = l.depth;
    j["layer_sizes"] = nlohmann::json::array();
    for (const auto& layer : l.layers) j["layer_sizes"].push_back(layer.size());
    j["layers"] = l.layers;
    j["edge_count"] = l.edge_count;
    j["vertex_count"] = l.vertex_count;
    j["tree_excess"] = l.tree_excess;
    return j;
}

inline nlohmann::json cycles_to_json(const SmallCycleReport& r) {
    nlohmann::json j;
    j["max_length"] = r.max_length;
    j["count"] = r.cycles.size();
    j["cycles"] = r.cycles;
    j["min_distance"] = r.min_distance ? nlohmann::json(*r.min_distance) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json tail_fit_to_json(const TailFit& f, bool left) {
    nlohmann::json j;
    j[left ? "alpha_hat" : "exponent"] = f.exponent;
    j["slope"] = f.slope;
    j["r2"] = f.r2;
    j["window"] = {f.window_lo, f.window_hi};
    nlohmann::json bins = nlohmann::json::array();
    for (std::size_t i = 0; i < f.bin_counts.size(); ++i)
        bins.push_back({{"lo", f.bin_edges[i]}, {"hi", f.bin_edges[i + 1]}, {"count", f.bin_counts[i]},
                        {"used", static_cast<bool>(f.bin_used[i])}});
    j["bins"] = bins;
    j["samples"] = f.samples;
    return j;
}

inline void write_distance_csv(std::ostream& out, const SampledDistances& d) {
    out << "source,target,distance\n";
    for (const auto& s : d.samples)
        out << s.source << ',' << s.target << ',' << (s.distance ? std::to_string(*s.distance) : "") << '\n';
}

inline void write_cutoff_csv(std::ostream& out, const CutoffProfile& p) {
    out << "s,steps,tv\n";
    for (std::size_t k = 0; k < p.s_grid.size(); ++k)
        out << format_double(p.s_grid[k]) << ',' << p.steps[k] << ',' << format_double(p.tv_values[k]) << '\n';
}

inline void write_trials_csv(std::ostream& out, const WalkStats& s, bool header = true) {
    if (header) out << "trial,start,tau_cov,censored\n";
    for (std::size_t k = 0; k < s.tau_cov.size(); ++k)
        out << k << ',' << s.start << ',' << s.tau_cov[k] << ',' << (s.censored[k] ? 1 : 0) << '\n';
}

inline void write_return_csv(std::ostream& out, const ReturnProfile& r) {
    out << "t,p_return\n";
    for (std::size_t t = 0; t < r.p_return.size(); ++t) out << t << ',' << format_double(r.p_return[t]) << '\n';
}

}  // namespace dcmlab
