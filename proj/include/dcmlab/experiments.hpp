#pragma once

// Batch experiments: a JSON config names an experiment, a degree model, an n
// grid and seeds. Every (n, seed) cell is materialized, generated and analyzed
// independently; the cell rows, a per-n summary and any side files are handed
// to one collector and written in a fixed order once all cells are done.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dcmlab/dcm.hpp"
#include "dcmlab/degseq.hpp"
#include "dcmlab/digraph.hpp"
#include "dcmlab/error.hpp"
#include "dcmlab/io.hpp"
#include "dcmlab/parallel.hpp"
#include "dcmlab/rde.hpp"
#include "dcmlab/rng.hpp"
#include "dcmlab/stationary.hpp"
#include "dcmlab/stats.hpp"
#include "dcmlab/walk.hpp"

namespace dcmlab {

enum class Experiment { ScalingPiMin, ScalingPiMax, ScalingCover, Diameter, Cutoff, RdeTail, Returns, MergeCheck };

inline const std::vector<std::pair<std::string, Experiment>>& experiment_names() {
    static const std::vector<std::pair<std::string, Experiment>> names = {
        {"scaling-pimin", Experiment::ScalingPiMin}, {"scaling-pimax", Experiment::ScalingPiMax},
        {"scaling-cover", Experiment::ScalingCover}, {"diameter", Experiment::Diameter},
        {"cutoff", Experiment::Cutoff},              {"rde-tail", Experiment::RdeTail},
        {"returns", Experiment::Returns},            {"merge-check", Experiment::MergeCheck},
    };
    return names;
}

inline std::string to_string(Experiment e) {
    for (const auto& [name, value] : experiment_names())
        if (value == e) return name;
    return "?";
}

inline Experiment parse_experiment(const std::string& name) {
    for (const auto& [n, value] : experiment_names())
        if (n == name) return value;
    throw InputError("unknown experiment '" + name + "'");
}

struct CheckBound {
    std::optional<double> min;
    std::optional<double> max;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::ScalingPiMin;
    DegreeModel model;
    std::string model_source;  // path or "inline"
    std::vector<std::uint32_t> n_grid;
    std::vector<std::uint64_t> seeds;
    std::string format = "csv";  // csv | json
    std::string output = "results";
    bool simple = false;
    BalanceMode balance = BalanceMode::Reject;
    std::uint64_t connect_attempts = 100;

    // walk
    std::uint64_t trials = 100;
    std::uint32_t starts = 5;
    std::optional<std::uint64_t> step_cap;
    // stationary
    double tolerance = 1e-12;
    // scaling-pimin witness set
    double witness_beta = 0.1;
    double witness_factor = 2.0;
    // diameter
    std::string diameter_mode = "exact";  // exact | sampled
    std::uint64_t distance_pairs = 100000;
    // cutoff
    std::vector<double> s_grid = {0.5, 1.5};
    std::uint32_t sources = 20;
    // returns
    std::uint32_t vertices = 50;
    double return_threshold = 1.05;
    // merge-check
    std::uint32_t pairs = 20;
    double merge_factor = 10.0;
    // rde-tail
    std::uint64_t pool = 1000000;
    std::uint64_t rounds = 60;
    std::uint64_t samples = 1000000;
    int bins = 10;
    std::uint64_t min_bin_count = 50;
    std::optional<std::pair<double, double>> window;
    std::optional<std::uint32_t> ks_n;

    std::map<std::string, CheckBound> checks;
};

namespace detail {

template <class T>
T knob(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

/// Parses and validates a config; relative model paths resolve against base_dir.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    try {
        c.experiment = parse_experiment(j.at("experiment").get<std::string>());
        const auto& m = j.at("model");
        if (m.is_string()) {
            std::filesystem::path p = m.get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            c.model = load_model(p.string());
            c.model_source = m.get<std::string>();
        } else {
            c.model = parse_model(m);
            c.model_source = "inline";
        }
        if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<std::uint32_t>>();
        const auto& s = j.at("seeds");
        if (s.is_number_integer()) {
            const auto count = s.get<std::int64_t>();
            if (count <= 0) throw InputError("seeds count must be positive");
            for (std::int64_t i = 1; i <= count; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
        } else {
            c.seeds = s.get<std::vector<std::uint64_t>>();
        }
        c.format = detail::knob<std::string>(j, "format", c.format);
        c.output = detail::knob<std::string>(j, "output", c.output);
        c.simple = detail::knob(j, "simple", c.simple);
        const auto balance = detail::knob<std::string>(j, "balance", "reject");
        if (balance == "reject")
            c.balance = BalanceMode::Reject;
        else if (balance == "drop-to-feasible")
            c.balance = BalanceMode::DropToFeasible;
        else
            throw InputError("balance must be reject or drop-to-feasible");
        c.connect_attempts = detail::knob(j, "connect_attempts", c.connect_attempts);
        c.trials = detail::knob(j, "trials", c.trials);
        c.starts = detail::knob(j, "starts", c.starts);
        if (j.contains("step_cap")) c.step_cap = j.at("step_cap").get<std::uint64_t>();
        c.tolerance = detail::knob(j, "tolerance", c.tolerance);
        c.witness_beta = detail::knob(j, "witness_beta", c.witness_beta);
        c.witness_factor = detail::knob(j, "witness_factor", c.witness_factor);
        c.diameter_mode = detail::knob<std::string>(j, "diameter_mode", c.diameter_mode);
        c.distance_pairs = detail::knob(j, "distance_pairs", c.distance_pairs);
        c.s_grid = detail::knob(j, "s_grid", c.s_grid);
        c.sources = detail::knob(j, "sources", c.sources);
        c.vertices = detail::knob(j, "vertices", c.vertices);
        c.return_threshold = detail::knob(j, "return_threshold", c.return_threshold);
        c.pairs = detail::knob(j, "pairs", c.pairs);
        c.merge_factor = detail::knob(j, "merge_factor", c.merge_factor);
        c.pool = detail::knob(j, "pool", c.pool);
        c.rounds = detail::knob(j, "rounds", c.rounds);
        c.samples = detail::knob(j, "samples", c.samples);
        c.bins = detail::knob(j, "bins", c.bins);
        c.min_bin_count = detail::knob(j, "min_bin_count", c.min_bin_count);
        if (j.contains("window")) {
            const auto w = j.at("window").get<std::vector<double>>();
            if (w.size() != 2) throw InputError("window must be [lo, hi]");
            c.window = std::make_pair(w[0], w[1]);
        }
        if (j.contains("ks_n")) c.ks_n = j.at("ks_n").get<std::uint32_t>();
        if (j.contains("checks"))
            for (const auto& [field, bound] : j.at("checks").items()) {
                CheckBound b;
                if (bound.contains("min")) b.min = bound.at("min").get<double>();
                if (bound.contains("max")) b.max = bound.at("max").get<double>();
                c.checks[field] = b;
            }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed config: ") + e.what());
    }

    if (c.seeds.empty()) throw InputError("seeds must be non-empty");
    if (c.experiment != Experiment::RdeTail && c.n_grid.empty()) throw InputError("n_grid must be non-empty");
    for (std::size_t i = 1; i < c.n_grid.size(); ++i)
        if (c.n_grid[i] <= c.n_grid[i - 1]) throw InputError("n_grid must be strictly increasing");
    if (c.format != "csv" && c.format != "json") throw InputError("format must be csv or json");
    if (c.diameter_mode != "exact" && c.diameter_mode != "sampled")
        throw InputError("diameter_mode must be exact or sampled");
    if (c.trials == 0 || c.starts == 0) throw InputError("trials and starts must be positive");
    if (c.s_grid.empty()) throw InputError("s_grid must be non-empty");
    if (c.pool < 2) throw InputError("pool must hold at least 2 samples");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Result tables

using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Row {
    std::vector<std::pair<std::string, Value>> cells;

    Row& set(const std::string& key, Value v) {
        for (auto& [k, old] : cells)
            if (k == key) {
                old = std::move(v);
                return *this;
            }
        cells.emplace_back(key, std::move(v));
        return *this;
    }
    const Value* get(const std::string& key) const {
        for (const auto& [k, v] : cells)
            if (k == key) return &v;
        return nullptr;
    }
    std::optional<double> number(const std::string& key) const {
        const Value* v = get(key);
        if (!v) return std::nullopt;
        if (const auto* d = std::get_if<double>(v)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
        return std::nullopt;
    }
};

inline std::string value_text(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return "";
}

inline nlohmann::json value_json(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) return std::isfinite(*d) ? nlohmann::json(*d) : nlohmann::json(nullptr);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return nullptr;
}

/// CSV with the union of columns in first-seen order.
inline std::string rows_to_csv(const std::vector<Row>& rows) {
    std::vector<std::string> cols;
    for (const auto& r : rows)
        for (const auto& [k, v] : r.cells)
            if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    std::ostringstream out;
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out << ',';
            if (const Value* v = r.get(cols[i])) {
                std::string text = value_text(*v);
                if (text.find_first_of(",\"\n") != std::string::npos) {
                    std::string quoted = "\"";
                    for (const char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                    text = quoted + "\"";
                }
                out << text;
            }
        }
        out << '\n';
    }
    return out.str();
}

inline nlohmann::ordered_json rows_to_json(const std::vector<Row>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r.cells) obj[k] = value_json(v);
        arr.push_back(obj);
    }
    return arr;
}

/// Holds every output file until the run finishes; files are written in name order.
class OutputCollector {
public:
    void add(const std::string& name, std::string content) {
        std::lock_guard lock(mutex_);
        files_[name] = std::move(content);
    }
    const std::map<std::string, std::string>& files() const { return files_; }

    void write_all(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& [name, content] : files_) {
            std::ofstream out(dir / name, std::ios::binary);
            if (!out) throw InputError("cannot write " + (dir / name).string());
            out << content;
        }
    }

private:
    std::mutex mutex_;
    std::map<std::string, std::string> files_;
};

struct CheckResult {
    std::string field;
    std::optional<double> value;
    CheckBound bound;
    bool passed = false;
};

struct RunResult {
    std::vector<Row> rows;     // one per cell, in (n, seed) order
    std::vector<Row> summary;  // per-n rows followed by one "all" row
    std::vector<CheckResult> checks;
    std::vector<std::string> failures;  // "stage: message" for failed cells
    std::vector<std::string> warnings;
    int exit_code() const {
        if (!failures.empty()) return 1;
        for (const auto& c : checks)
            if (!c.passed) return 1;
        return 0;
    }
};

// ---------------------------------------------------------------------------
// Cells

namespace detail {

inline constexpr std::uint64_t kWalkTag = 0x77616c6b;    // "walk"
inline constexpr std::uint64_t kSampleTag = 0x73616d70;  // "samp"

/// Tracks which stage a cell is in so failures can be reported by name.
struct Stage {
    std::string name = "setup";
};

struct CellOutput {
    Row row;
    std::vector<double> n_pi;  // kept for cross-seed summaries (scaling-pimin)
    std::vector<double> per_start_means;
    std::vector<std::pair<std::string, std::string>> files;
    std::optional<std::string> warning;
};

/// n-seed suffix used for side-file names.
inline std::string cell_tag(std::uint32_t n, std::uint64_t seed) {
    return "n" + std::to_string(n) + "_s" + std::to_string(seed);
}

/// Generates a strongly connected instance: attempt a uses stream a. Simple
/// mode delegates to the rejection sampler and keeps its own attempt count.
inline MultiDigraph connected_instance(const ExperimentConfig& c, const DegreeSequence& seq, std::uint64_t seed,
                                       std::uint64_t* attempts) {
    for (std::uint64_t a = 0; a < c.connect_attempts; ++a) {
        MultiDigraph g = c.simple ? generate_simple(seq, derive_seed(seed, a)) : generate(seq, seed, a);
        if (is_strongly_connected(g).strongly_connected) {
            *attempts = a + 1;
            return g;
        }
    }
    throw Error("no strongly connected instance after " + std::to_string(c.connect_attempts) + " attempts");
}

inline double log_pow(double n, double e) { return std::pow(std::log(n), e); }

inline std::vector<Vertex> sample_without_replacement(std::vector<Vertex> pool, std::size_t k, std::uint64_t seed) {
    Philox rng(seed, 0);
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(k);
    return pool;
}

inline CellOutput run_cell(const ExperimentConfig& c, const Exponents& ex, std::uint32_t n_req, std::uint64_t seed,
                           unsigned threads, Stage& stage) {
    CellOutput out;
    Row& row = out.row;

    stage.name = "materialize";
    auto mat = materialize(c.model, n_req, c.balance, false);
    out.warning = mat.warning;
    const DegreeSequence& seq = mat.sequence;
    const std::uint32_t n = seq.n();
    const double nd = n;
    row.set("n", std::int64_t{n_req}).set("seed", static_cast<std::int64_t>(seed));
    if (n != n_req) row.set("n_used", std::int64_t{n});
    const ModelScales sc = scales(seq);

    stage.name = "generate";
    std::uint64_t attempts = 0;
    const MultiDigraph g = connected_instance(c, seq, seed, &attempts);
    row.set("attempts", static_cast<std::int64_t>(attempts));
    const std::string tag = cell_tag(n_req, seed);
    const std::uint64_t walk_seed = derive_seed(seed, kWalkTag);
    const std::uint64_t sample_seed = derive_seed(seed, kSampleTag);

    auto solve_pi = [&]() {
        stage.name = "stationary";
        SolveOptions opt;
        opt.tolerance = c.tolerance;
        return solve(g, opt);
    };

    switch (c.experiment) {
        case Experiment::ScalingPiMin:
        case Experiment::ScalingPiMax: {
            const auto st = solve_pi();
            stage.name = "analyze";
            row.set("iterations", static_cast<std::int64_t>(st.iterations))
                .set("method", std::string(to_string(st.method)))
                .set("residual", st.residual);
            if (c.experiment == Experiment::ScalingPiMin) {
                const double v = nd * st.pi_min;
                row.set("n_pi_min", v)
                    .set("norm_gamma1", v / log_pow(nd, 1.0 - ex.gamma1))
                    .set("norm_gamma0", v / log_pow(nd, 1.0 - ex.gamma0))
                    .set("argmin", std::int64_t{st.argmin});
                out.n_pi.resize(n);
                for (Vertex x = 0; x < n; ++x) out.n_pi[x] = nd * st.pi[x];
            } else {
                const double v = nd * st.pi_max;
                row.set("n_pi_max", v)
                    .set("norm_kappa1", v / log_pow(nd, 1.0 - ex.kappa1))
                    .set("norm_kappa0", v / log_pow(nd, 1.0 - ex.kappa0))
                    .set("argmax", std::int64_t{st.argmax});
            }
            break;
        }
        case Experiment::ScalingCover: {
            stage.name = "cover";
            std::vector<Vertex> all(n);
            for (Vertex x = 0; x < n; ++x) all[x] = x;
            const auto starts = sample_without_replacement(std::move(all), c.starts, sample_seed);
            const auto est = estimate_tcov(g, starts, c.trials, walk_seed, c.step_cap, threads);
            std::uint64_t min_tau = UINT64_MAX;
            std::ostringstream trials_csv;
            trials_csv << "trial,start,tau_cov,censored\n";
            for (const auto& s : est.per_start) {
                write_trials_csv(trials_csv, s, false);
                out.per_start_means.push_back(s.summary.mean);
                for (std::size_t k = 0; k < s.tau_cov.size(); ++k)
                    if (!s.censored[k]) min_tau = std::min(min_tau, s.tau_cov[k]);
            }
            out.files.emplace_back("trials_" + tag + ".csv", trials_csv.str());
            const auto& best = est.per_start[std::find(starts.begin(), starts.end(), est.argmax_start) - starts.begin()];
            row.set("t_cov", est.t_cov)
                .set("ci_low", best.summary.ci_low)
                .set("ci_high", best.summary.ci_high)
                .set("argmax_start", std::int64_t{est.argmax_start})
                .set("censored", static_cast<std::int64_t>(est.censored_count))
                .set("min_tau", min_tau == UINT64_MAX ? Value{} : Value{static_cast<std::int64_t>(min_tau)})
                .set("ratio_gamma1", est.t_cov / (nd * log_pow(nd, ex.gamma1)))
                .set("ratio_gamma0", est.t_cov / (nd * log_pow(nd, ex.gamma0)));
            if (ex.beta_euler) row.set("ratio_euler", est.t_cov / (*ex.beta_euler * nd * std::log(nd)));
            break;
        }
        case Experiment::Diameter: {
            stage.name = "diameter";
            row.set("d_star", sc.d_star);
            if (c.diameter_mode == "exact") {
                const auto d = diameter_exact(g, kDefaultDiameterCap, threads);
                row.set("diameter", std::int64_t{d}).set("ratio", d / sc.d_star);
            } else {
                const auto d = diameter_sampled(g, c.distance_pairs, sample_seed, threads);
                std::ostringstream csv;
                write_distance_csv(csv, d);
                out.files.emplace_back("distances_" + tag + ".csv", csv.str());
                row.set("diameter_sampled_max", static_cast<std::int64_t>(d.max))
                    .set("mean_distance", d.mean)
                    .set("q99", d.q99)
                    .set("unreachable", static_cast<std::int64_t>(d.unreachable))
                    .set("ratio", d.max / sc.d_star);
            }
            break;
        }
        case Experiment::Cutoff: {
            const auto st = solve_pi();
            stage.name = "cutoff";
            const TransitionOperator p(g);
            const auto prof = cutoff_profile(p, st.pi, sc.t_ent, c.s_grid, c.sources, sample_seed, threads);
            std::ostringstream csv;
            write_cutoff_csv(csv, prof);
            out.files.emplace_back("cutoff_" + tag + ".csv", csv.str());
            row.set("t_ent", sc.t_ent);
            for (std::size_t k = 0; k < prof.s_grid.size(); ++k)
                row.set("tv_at_" + format_double(prof.s_grid[k]), prof.tv_values[k]);
            break;
        }
        case Experiment::Returns: {
            stage.name = "ltl";
            const auto part = classify_ltl(g, ltl_depth(n));
            const auto chosen = sample_without_replacement(part.ltl, c.vertices, sample_seed);
            stage.name = "returns";
            const auto horizon = static_cast<std::uint64_t>(std::ceil(std::pow(std::log(nd), 3.0)));
            const TransitionOperator p(g);
            std::vector<double> r(chosen.size());
            std::vector<ReturnProfile> profiles(chosen.size());
            parallel_for(chosen.size(), threads, [&](std::size_t i) { profiles[i] = return_profile(p, chosen[i], horizon); });
            std::ostringstream csv;
            csv << "vertex,r1\n";
            std::size_t ok = 0;
            for (std::size_t i = 0; i < chosen.size(); ++i) {
                r[i] = profiles[i].r1;
                csv << chosen[i] << ',' << format_double(r[i]) << '\n';
                if (r[i] <= c.return_threshold) ++ok;
            }
            out.files.emplace_back("returns_" + tag + ".csv", csv.str());
            if (!profiles.empty()) {
                std::ostringstream prof;
                write_return_csv(prof, profiles.front());
                out.files.emplace_back("return_profile_" + tag + "_y" + std::to_string(chosen.front()) + ".csv",
                                       prof.str());
            }
            std::vector<double> sorted = r;
            std::sort(sorted.begin(), sorted.end());
            row.set("horizon", static_cast<std::int64_t>(horizon))
                .set("ltl_count", static_cast<std::int64_t>(part.ltl.size()))
                .set("sampled", static_cast<std::int64_t>(chosen.size()))
                .set("r_median", sorted.empty() ? Value{} : Value{quantile_sorted(sorted, 0.5)})
                .set("r_max", sorted.empty() ? Value{} : Value{sorted.back()})
                .set("fraction_ok", chosen.empty() ? Value{} : Value{double(ok) / chosen.size()});
            break;
        }
        case Experiment::MergeCheck: {
            const auto st = solve_pi();
            stage.name = "ltl";
            auto ltl = classify_ltl(g, ltl_depth(n)).ltl;
            std::sort(ltl.begin(), ltl.end(), [&](Vertex a, Vertex b) {
                return st.pi[a] != st.pi[b] ? st.pi[a] < st.pi[b] : a < b;
            });
            stage.name = "merge";
            const double tol = st.pi_min / std::log(nd);
            // Adjacent pairs in pi order, spread evenly over the LTL set.
            std::vector<std::pair<Vertex, Vertex>> chosen;
            if (ltl.size() >= 2 && c.pairs > 0) {
                const std::size_t stride = std::max<std::size_t>(1, (ltl.size() - 1) / c.pairs);
                for (std::size_t i = 0; i + 1 < ltl.size() && chosen.size() < c.pairs; i += stride)
                    if (std::abs(st.pi[ltl[i]] - st.pi[ltl[i + 1]]) <= tol) chosen.emplace_back(ltl[i], ltl[i + 1]);
            }
            std::vector<double> err(chosen.size());
            parallel_for(chosen.size(), threads, [&](std::size_t i) {
                const auto [y, yp] = chosen[i];
                const auto mr = merge_vertices(g, y, yp);
                SolveOptions opt;
                opt.tolerance = c.tolerance;
                const auto s2 = solve(mr.graph, opt);
                err[i] = std::abs(st.pi[y] + st.pi[yp] - s2.pi[mr.merged]);
            });
            std::ostringstream csv;
            csv << "y,y_prime,pi_y,pi_y_prime,err_over_pi_min\n";
            std::size_t ok = 0;
            double worst = 0.0;
            for (std::size_t i = 0; i < chosen.size(); ++i) {
                csv << chosen[i].first << ',' << chosen[i].second << ',' << format_double(st.pi[chosen[i].first]) << ','
                    << format_double(st.pi[chosen[i].second]) << ',' << format_double(err[i] / st.pi_min) << '\n';
                if (err[i] <= c.merge_factor * tol) ++ok;
                worst = std::max(worst, err[i] / tol);
            }
            out.files.emplace_back("merge_" + tag + ".csv", csv.str());
            row.set("pairs", static_cast<std::int64_t>(chosen.size()))
                .set("passed", static_cast<std::int64_t>(ok))
                .set("fraction_ok", chosen.empty() ? Value{} : Value{double(ok) / chosen.size()})
                .set("max_err_over_tol", worst);
            break;
        }
        case Experiment::RdeTail:
            break;
    }
    return out;
}

inline CellOutput run_rde_cell(const ExperimentConfig& c, const Exponents& ex, std::uint64_t seed, unsigned threads,
                               Stage& stage) {
    CellOutput out;
    Row& row = out.row;
    row.set("seed", static_cast<std::int64_t>(seed));
    stage.name = "population";
    auto pop = iterate(make_population(c.model, c.pool, seed), c.rounds, threads);
    double dev = 0.0;
    for (const double m : pop.raw_means) dev = std::max(dev, std::abs(m - 1.0));
    row.set("rounds", static_cast<std::int64_t>(pop.round))
        .set("max_mean_deviation", dev)
        .set("pool_variance", pool_variance(pop.pool));
    {
        std::ostringstream snap;
        write_pool_binary(snap, pop);
        out.files.emplace_back("pool_s" + std::to_string(seed) + ".bin", snap.str());
    }
    stage.name = "sample";
    const auto xs = sample_x(pop, c.samples, seed, threads);
    stage.name = "fit";
    TailFitOptions opt;
    opt.bins = c.bins;
    opt.min_bin_count = c.min_bin_count;
    opt.window = c.window;
    const auto left = fit_left_tail(xs, opt);
    row.set("alpha_hat", left.exponent).set("r2", left.r2).set("window_lo", left.window_lo).set("window_hi", left.window_hi);
    if (ex.alpha) row.set("alpha_target", *ex.alpha).set("rel_err", std::abs(left.exponent - *ex.alpha) / *ex.alpha);
    nlohmann::json fits;
    fits["left"] = tail_fit_to_json(left, true);
    try {
        TailFitOptions ropt = opt;
        ropt.window.reset();
        const auto right = fit_right_tail(xs, ropt);
        row.set("right_exponent", right.exponent);
        fits["right"] = tail_fit_to_json(right, false);
    } catch (const FitRefused& e) {
        fits["right"] = {{"refused", e.what()}};
    }
    out.files.emplace_back("tailfit_s" + std::to_string(seed) + ".json", fits.dump(2) + "\n");
    if (c.ks_n) {
        stage.name = "coupling";
        const auto mat = materialize(c.model, *c.ks_n, c.balance, false);
        std::uint64_t attempts = 0;
        const auto g = connected_instance(c, mat.sequence, seed, &attempts);
        SolveOptions sopt;
        sopt.tolerance = c.tolerance;
        auto st = solve(g, sopt);
        for (double& p : st.pi) p *= mat.sequence.n();
        row.set("ks_n", std::int64_t{*c.ks_n}).set("ks_distance", ks_distance(st.pi, xs));
    }
    return out;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

inline double spread(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

}  // namespace detail

/// Runs every cell, builds the summary and evaluates the configured checks.
/// Cell failures are recorded per cell; other cells are unaffected.
inline RunResult run_experiment(const ExperimentConfig& c, OutputCollector& files, unsigned threads = 0) {
    if (threads == 0) threads = default_threads();
    const Exponents ex = exponents(c.model);
    RunResult result;

    struct Cell {
        std::uint32_t n = 0;
        std::uint64_t seed = 0;
        detail::CellOutput out;
        std::optional<std::string> failure;
    };
    std::vector<Cell> cells;
    if (c.experiment == Experiment::RdeTail) {
        for (const auto s : c.seeds) cells.push_back({0, s, {}, {}});
    } else {
        for (const auto n : c.n_grid)
            for (const auto s : c.seeds) cells.push_back({n, s, {}, {}});
    }
    const unsigned outer = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));
    const unsigned inner = std::max(1u, threads / std::max(1u, outer));
    parallel_for(cells.size(), outer, [&](std::size_t i) {
        Cell& cell = cells[i];
        detail::Stage stage;
        try {
            cell.out = c.experiment == Experiment::RdeTail ? detail::run_rde_cell(c, ex, cell.seed, inner, stage)
                                                           : detail::run_cell(c, ex, cell.n, cell.seed, inner, stage);
            cell.out.row.cells.insert(cell.out.row.cells.begin(), {"status", std::string("ok")});
            for (auto& [name, content] : cell.out.files) files.add(name, std::move(content));
        } catch (const std::exception& e) {
            cell.failure = stage.name + ": " + e.what();
            cell.out = {};
            cell.out.row.set("status", "failed:" + stage.name);
            if (c.experiment != Experiment::RdeTail) cell.out.row.set("n", std::int64_t{cell.n});
            cell.out.row.set("seed", static_cast<std::int64_t>(cell.seed)).set("error", std::string(e.what()));
        }
    });

    for (auto& cell : cells) {
        result.rows.push_back(cell.out.row);
        if (cell.failure)
            result.failures.push_back("n=" + std::to_string(cell.n) + " seed=" + std::to_string(cell.seed) + " " +
                                      *cell.failure);
        if (cell.out.warning) result.warnings.push_back(*cell.out.warning);
    }

    // Per-n means of the key columns, then the cross-n summary row.
    std::vector<std::string> keys;
    switch (c.experiment) {
        case Experiment::ScalingPiMin: keys = {"n_pi_min", "norm_gamma1", "norm_gamma0"}; break;
        case Experiment::ScalingPiMax: keys = {"n_pi_max", "norm_kappa1", "norm_kappa0"}; break;
        case Experiment::ScalingCover: keys = {"t_cov", "ratio_gamma1", "ratio_gamma0", "ratio_euler"}; break;
        case Experiment::Diameter: keys = {"ratio"}; break;
        case Experiment::Cutoff:
            for (const double s : c.s_grid) keys.push_back("tv_at_" + format_double(s));
            break;
        case Experiment::RdeTail:
            keys = {"alpha_hat", "rel_err", "max_mean_deviation", "pool_variance", "ks_distance"};
            break;
        case Experiment::Returns: keys = {"fraction_ok", "r_median", "r_max"}; break;
        case Experiment::MergeCheck: keys = {"fraction_ok", "max_err_over_tol"}; break;
    }

    Row all;
    all.set("scope", std::string("all"));
    std::map<std::string, std::vector<double>> per_n_means;
    std::map<std::string, std::vector<double>> every_value;
    const std::vector<std::uint32_t> groups = c.experiment == Experiment::RdeTail ? std::vector<std::uint32_t>{0} : c.n_grid;
    for (const auto n : groups) {
        Row r;
        r.set("scope", std::string(c.experiment == Experiment::RdeTail ? "all-seeds" : "n"));
        if (c.experiment != Experiment::RdeTail) r.set("n", std::int64_t{n});
        std::int64_t ok_cells = 0;
        for (const auto& cell : cells)
            if (cell.n == n && !cell.failure) ++ok_cells;
        r.set("cells_ok", ok_cells);
        for (const auto& key : keys) {
            std::vector<double> vals;
            for (const auto& cell : cells)
                if (cell.n == n && !cell.failure)
                    if (auto v = cell.out.row.number(key); v && std::isfinite(*v)) vals.push_back(*v);
            if (vals.empty()) continue;
            const double mean = summarize(vals).mean;
            r.set(key + "_mean", mean);
            r.set(key + "_min", *std::min_element(vals.begin(), vals.end()));
            r.set(key + "_max", *std::max_element(vals.begin(), vals.end()));
            per_n_means[key].push_back(mean);
            every_value[key].insert(every_value[key].end(), vals.begin(), vals.end());
        }
        result.summary.push_back(r);
    }
    for (const auto& key : keys) {
        const auto it = every_value.find(key);
        if (it == every_value.end()) continue;
        all.set(key + "_min", *std::min_element(it->second.begin(), it->second.end()));
        all.set(key + "_max", *std::max_element(it->second.begin(), it->second.end()));
        if (groups.size() > 1) all.set(key + "_variation", detail::spread(per_n_means[key]));
    }

    switch (c.experiment) {
        case Experiment::ScalingPiMin: {
            // Witness set at the largest n: C = witness_factor * median normalized pi_min over seeds.
            const std::uint32_t n = c.n_grid.back();
            std::vector<double> norms;
            for (const auto& cell : cells)
                if (cell.n == n && !cell.failure) norms.push_back(*cell.out.row.number("norm_gamma1"));
            if (!norms.empty()) {
                const double cst = c.witness_factor * detail::median(norms);
                const double bound = cst * detail::log_pow(n, 1.0 - ex.gamma1);
                double min_count = INFINITY;
                for (auto& cell : cells) {
                    if (cell.n != n || cell.failure) continue;
                    const auto count = std::count_if(cell.out.n_pi.begin(), cell.out.n_pi.end(),
                                                     [&](double v) { return v <= bound; });
                    cell.out.row.set("witness_count", static_cast<std::int64_t>(count));
                    min_count = std::min(min_count, static_cast<double>(count));
                }
                for (std::size_t i = 0; i < cells.size(); ++i) result.rows[i] = cells[i].out.row;
                const double target = std::pow(static_cast<double>(n), c.witness_beta);
                all.set("witness_c", cst)
                    .set("witness_count_min", min_count)
                    .set("witness_target", target)
                    .set("witness_ratio", min_count / target);
            }
            break;
        }
        case Experiment::ScalingCover: {
            if (per_n_means.count("ratio_euler") && per_n_means["ratio_euler"].size() == groups.size() &&
                groups.size() > 1) {
                const auto& r = per_n_means["ratio_euler"];
                bool toward = true;
                for (std::size_t i = 1; i < r.size(); ++i) toward &= std::abs(r[i] - 1.0) < std::abs(r[i - 1] - 1.0);
                all.set("euler_toward_one", std::int64_t{toward ? 1 : 0});
            }
            double min_tau = INFINITY;
            std::int64_t censored = 0;
            for (const auto& cell : cells) {
                if (cell.failure) continue;
                if (auto v = cell.out.row.number("min_tau")) min_tau = std::min(min_tau, *v);
                censored += static_cast<std::int64_t>(cell.out.row.number("censored").value_or(0));
            }
            if (std::isfinite(min_tau)) all.set("min_tau", min_tau);
            all.set("censored", censored);
            break;
        }
        default: break;
    }
    result.summary.push_back(all);

    for (const auto& [field, bound] : c.checks) {
        CheckResult cr;
        cr.field = field;
        cr.bound = bound;
        cr.value = all.number(field);
        cr.passed = cr.value && std::isfinite(*cr.value) && (!bound.min || *cr.value >= *bound.min) &&
                    (!bound.max || *cr.value <= *bound.max);
        result.checks.push_back(cr);
    }

    const std::string base = to_string(c.experiment);
    if (c.format == "csv") {
        files.add(base + ".csv", rows_to_csv(result.rows));
        files.add(base + "_summary.csv", rows_to_csv(result.summary));
    } else {
        files.add(base + ".json", rows_to_json(result.rows).dump(2) + "\n");
        files.add(base + "_summary.json", rows_to_json(result.summary).dump(2) + "\n");
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& cr : result.checks)
        checks.push_back({{"field", cr.field},
                          {"value", cr.value ? nlohmann::json(*cr.value) : nlohmann::json(nullptr)},
                          {"min", cr.bound.min ? nlohmann::json(*cr.bound.min) : nlohmann::json(nullptr)},
                          {"max", cr.bound.max ? nlohmann::json(*cr.bound.max) : nlohmann::json(nullptr)},
                          {"passed", cr.passed}});
    nlohmann::json report = {{"experiment", base},
                             {"model", c.model_source},
                             {"checks", checks},
                             {"failures", result.failures},
                             {"warnings", result.warnings}};
    files.add("report.json", report.dump(2) + "\n");
    return result;
}

}  // namespace dcmlab
