// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// Usage: acceptance [config-dir] [out-dir]
// config-dir defaults to $DCMLAB_CONFIG_DIR, then the source tree's configs/.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dcmlab/dcmlab.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dcmlab;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

fs::path g_config_dir;
fs::path g_out_dir;

struct Run {
    RunResult result;
    std::map<std::string, std::string> files;
};
std::map<std::string, Run> g_runs;

const Run& run_config(const std::string& name) {
    if (const auto it = g_runs.find(name); it != g_runs.end()) return it->second;
    const auto cfg = load_config((g_config_dir / (name + ".json")).string());
    OutputCollector files;
    Run r;
    r.result = run_experiment(cfg, files);
    r.files = files.files();
    files.write_all(g_out_dir / name);
    return g_runs.emplace(name, std::move(r)).first->second;
}

const Row& summary_all(const Run& r) { return r.result.summary.back(); }

double field(const Run& r, const std::string& key) {
    const auto v = summary_all(r).number(key);
    return v ? *v : NAN;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

std::string describe_checks(const Run& r) {
    std::string s;
    for (const auto& c : r.result.checks) {
        if (!s.empty()) s += ", ";
        s += c.field + "=" + (c.value ? fmt(*c.value) : std::string("missing")) + (c.passed ? "" : " (out of bounds)");
    }
    if (!r.result.failures.empty()) s += ", " + std::to_string(r.result.failures.size()) + " failed cells";
    return s;
}

bool checks_pass(const Run& r) {
    return r.result.failures.empty() && !r.result.checks.empty() &&
           std::all_of(r.result.checks.begin(), r.result.checks.end(), [](const CheckResult& c) { return c.passed; });
}

DegreeModel two_types(DegreeType a, DegreeType b) {
    DegreeModel m;
    m.entries = {{a, Fraction::make(1, 2)}, {b, Fraction::make(1, 2)}};
    m.linear_types = {a, b};
    return m;
}

/// Same resampling rule as the harness: attempt a uses stream a.
MultiDigraph strong_instance(const DegreeModel& model, std::uint32_t n, std::uint64_t seed) {
    const auto seq = materialize(model, n).sequence;
    for (std::uint64_t a = 0; a < 100; ++a) {
        auto g = generate(seq, seed, a);
        if (is_strongly_connected(g).strongly_connected) return g;
    }
    throw std::runtime_error("no strongly connected instance");
}

// ---------------------------------------------------------------------------

double g_max_residual = 0.0;
int g_residual_instances = 0;

void note_residual(double r) {
    g_max_residual = std::max(g_max_residual, r);
    ++g_residual_instances;
}

Outcome eulerian_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g = strong_instance(two_types({2, 2}, {3, 3}), 10000, 1);
    const auto st = solve(g);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note_residual(st.residual);
    double err = 0.0;
    for (Vertex x = 0; x < g.n(); ++x)
        err = std::max(err, std::abs(st.pi[x] - static_cast<double>(g.in_degree(x)) / g.m()));
    return {err <= 1e-10 && secs < 10.0, "max|pi - d/m| = " + fmt(err) + ", " + fmt(secs, 3) + " s"};
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    Philox rng(2024, 0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto n = static_cast<Vertex>(20 + rng.below(481));
        const auto g = oracle::random_strong(n, n + static_cast<std::uint32_t>(rng.below(2 * n)), 500 + i);
        const TransitionOperator p(g);
        const auto a = solve(p);
        const auto b = direct_solve(p);
        note_residual(a.residual);
        for (Vertex x = 0; x < n; ++x) worst = std::max(worst, std::abs(a.pi[x] - b.pi[x]));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-9 && secs < 60.0, "max L_inf = " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome stationarity_residual() {
    for (const std::uint32_t n : {1000u, 10000u, 100000u}) {
        const auto g = strong_instance(two_types({2, 3}, {3, 2}), n, 7);
        note_residual(solve(g).residual);
    }
    return {g_max_residual <= 1e-10,
            "max residual " + fmt(g_max_residual) + " over " + std::to_string(g_residual_instances) + " instances"};
}

Outcome gamma_tree_equality() {
    // 20 vertices per generated instance whose depth-h in-ball is a tree, h in 1..5;
    // the right-hand side is computed in exact rationals.
    double worst = 0.0;
    int compared = 0;
    for (std::uint64_t inst = 0; inst < 3; ++inst) {
        const auto g = strong_instance(two_types({2, 3}, {3, 2}), 10000, 40 + inst);
        const TransitionOperator p(g);
        Philox rng(41, inst);
        for (int here = 0; here < 20;) {
            const auto y = static_cast<Vertex>(rng.below(g.n()));
            const int h = 1 + static_cast<int>(rng.below(5));
            if (bfs_layers(g, y, Direction::In, h).tree_excess != 0) continue;
            const double exact = boost::rational_cast<double>(oracle::weighted_arrival(g, y, h));
            worst = std::max(worst, std::abs(gamma_h(p, y, h) - exact));
            ++here;
            ++compared;
        }
    }
    return {worst <= 1e-12, std::to_string(compared) + " tree-like (y, h), max diff " + fmt(worst)};
}

Outcome gamma_envelope() {
    const auto g = strong_instance(two_types({2, 3}, {3, 2}), 10000, 11);
    const TransitionOperator p(g);
    const auto sc = scales(g.degree_sequence());
    const int h_max = std::max(1, static_cast<int>(std::floor(sc.hslash)));
    const double dm = 2, Dm = 3, dp = 2, Dp = 3;
    Philox rng(12, 0);
    int inside = 0;
    constexpr int kDraws = 200;
    for (int k = 0; k < kDraws; ++k) {
        const auto y = static_cast<Vertex>(rng.below(g.n()));
        const int h = 1 + static_cast<int>(rng.below(h_max));
        const double v = gamma_h(p, y, h);
        inside += v >= std::pow(dm / Dp, h) && v <= 2 * Dm * std::pow(Dm / dp, h);
    }
    return {inside >= 198, std::to_string(inside) + "/200 inside, h <= " + std::to_string(h_max)};
}

Outcome config_outcome(const std::string& name) {
    const auto& r = run_config(name);
    return {checks_pass(r), describe_checks(r)};
}

Outcome diameter() {
    const auto& r = run_config("diameter");
    return {checks_pass(r), describe_checks(r) + ", d_star = " + fmt(r.result.rows.front().number("d_star").value_or(NAN))};
}

Outcome cover_time() {
    const auto& r = run_config("scaling_cover");
    bool tau_ok = true;
    for (const auto& row : r.result.rows) {
        const auto n = row.number("n"), tau = row.number("min_tau");
        tau_ok &= n && tau && *tau >= *n - 1;
    }
    const auto cyc = oracle::cycle(64);
    const auto s = simulate_cover(cyc, 0, 10, 1);
    const bool cycle_ok = std::all_of(s.tau_cov.begin(), s.tau_cov.end(), [](std::uint64_t t) { return t == 63; });
    return {checks_pass(r) && tau_ok && cycle_ok,
            describe_checks(r) + ", tau >= n-1: " + (tau_ok ? "yes" : "no") + ", cycle: " + (cycle_ok ? "n-1" : "wrong")};
}

Outcome rde_mean() {
    const auto& r = run_config("rde_tail");
    const double dev = field(r, "max_mean_deviation_max");
    DegreeModel reg;
    reg.entries = {{{3, 3}, Fraction::make(1, 1)}};
    reg.linear_types = {{3, 3}};
    const auto pop = iterate(make_population(reg, 1000000, 1), 60);
    const double var = pool_variance(pop.pool);
    return {dev <= 5e-3 && var < 1e-8, "max |mean - 1| = " + fmt(dev) + ", regular variance = " + fmt(var)};
}

Outcome rde_coupling() {
    const auto& r = run_config("rde_tail");
    const double ks = field(r, "ks_distance_max");
    return {ks <= 0.02, "KS = " + fmt(ks)};
}

Outcome rde_left_tail() {
    const double alpha = 1.0 / (std::log(3.0) / std::log(2.0) - 1.0);
    Philox rng(17, 0);
    std::vector<double> xs(1000000);
    for (double& x : xs) x = std::pow(-std::log(rng.uniform_open0()), -1.0 / alpha);
    const double synthetic = fit_left_tail(xs).exponent;
    const bool synth_ok = std::abs(synthetic - alpha) <= 0.10 * alpha;
    const auto& r = run_config("rde_tail");
    const double a = field(r, "alpha_hat_max");
    return {synth_ok && std::abs(a - alpha) <= 0.25 * alpha,
            "synthetic " + fmt(synthetic) + ", alpha_hat " + fmt(a) + ", target " + fmt(alpha)};
}

Outcome bfs_oracle() {
    Philox rng(18, 0);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<Vertex>(1 + rng.below(8));
        const auto m = static_cast<std::uint32_t>(rng.below(2 * n + 1));
        const auto g = oracle::random_any(n, m, 18000 + trial);
        for (Vertex c = 0; c < n; ++c)
            for (const bool in : {true, false})
                for (int depth = 0; depth <= 4; ++depth) {
                    const auto l = bfs_layers(g, c, in ? Direction::In : Direction::Out, depth);
                    const auto nb = oracle::enumerate_neighborhood(g, c, in, depth);
                    for (int t = 0; t <= depth; ++t) {
                        std::vector<Vertex> expect;
                        for (Vertex v = 0; v < n; ++v)
                            if (nb.dist[v] && *nb.dist[v] == t) expect.push_back(v);
                        auto got = l.layers[t];
                        std::sort(got.begin(), got.end());
                        mismatches += got != expect;
                    }
                    mismatches += l.tree_excess != nb.tree_excess;
                }
        for (Vertex x = 0; x < n; ++x)
            for (Vertex y = 0; y < n; ++y) {
                const auto d = distance(g, x, y).distance;
                const auto e = oracle::enumerate_distance(g, x, y);
                mismatches += d.has_value() != e.has_value() || (d && *d != static_cast<std::uint32_t>(*e));
            }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches on 100 graphs"};
}

Outcome determinism() {
    int compared = 0, differing = 0;
    const std::vector<std::string> names = {"diameter", "cutoff", "scaling_cover", "scaling_cover_eulerian",
                                            "returns",  "merge_check", "scaling_pimin", "scaling_pimax", "rde_tail"};
    for (const auto& name : names) {
        const auto& first = run_config(name);
        const auto cfg = load_config((g_config_dir / (name + ".json")).string());
        OutputCollector again;
        run_experiment(cfg, again, default_threads() == 1 ? 2 : 1);
        differing += again.files() != first.files;
        ++compared;
    }
    return {differing == 0, std::to_string(compared - differing) + "/" + std::to_string(compared) +
                                " configs byte-identical on rerun with a different thread count"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) {
        g_config_dir = argv[1];
    } else if (const char* env = std::getenv("DCMLAB_CONFIG_DIR")) {
        g_config_dir = env;
    } else {
#ifdef DCMLAB_CONFIG_DIR
        g_config_dir = DCMLAB_CONFIG_DIR;
#else
        g_config_dir = "configs";
#endif
    }
    g_out_dir = argc > 2 ? fs::path(argv[2]) : fs::path("acceptance_results");

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    // Criterion 2 aggregates residuals from the instances solved by 1 and 3, so it runs after them.
    const std::vector<Criterion> criteria = {
        {1, "eulerian-exactness", eulerian_exactness},
        {3, "oracle-equivalence", oracle_equivalence},
        {2, "stationarity-residual", stationarity_residual},
        {4, "gamma-tree-equality", gamma_tree_equality},
        {5, "gamma-envelope", gamma_envelope},
        {6, "diameter", diameter},
        {7, "pimin-scaling", [] {
             auto o = config_outcome("scaling_pimin");
             const auto& r = run_config("scaling_pimin");
             o.passed = field(r, "norm_gamma1_variation") <= 3.0 && field(r, "n_pi_min_variation") >= 3.0 &&
                        r.result.failures.empty();
             o.detail = "normalized variation " + fmt(field(r, "norm_gamma1_variation")) + ", raw variation " +
                        fmt(field(r, "n_pi_min_variation"));
             return o;
         }},
        {8, "pimax-scaling", [] { return config_outcome("scaling_pimax"); }},
        {9, "witness-set", [] {
             const auto& r = run_config("scaling_pimin");
             const double c = field(r, "witness_count_min"), t = field(r, "witness_target");
             return Outcome{c > t, "min count " + fmt(c, 6) + " vs n^0.1 = " + fmt(t)};
         }},
        {10, "cutoff", [] { return config_outcome("cutoff"); }},
        {11, "cover-time", cover_time},
        {12, "eulerian-cover", [] {
             auto o = config_outcome("scaling_cover_eulerian");
             const auto& r = run_config("scaling_cover_eulerian");
             std::string means;
             for (const auto& s : r.result.summary)
                 if (auto v = s.number("ratio_euler_mean")) means += (means.empty() ? "" : " -> ") + fmt(*v);
             o.detail += ", per-n ratios " + means;
             return o;
         }},
        {13, "return-times", [] { return config_outcome("returns"); }},
        {14, "merge-check", [] { return config_outcome("merge_check"); }},
        {15, "rde-mean", rde_mean},
        {16, "rde-coupling", rde_coupling},
        {17, "rde-left-tail", rde_left_tail},
        {18, "bfs-oracle", bfs_oracle},
        {19, "determinism", determinism},
    };

    std::map<int, Outcome> outcomes;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.passed ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
                  << fmt(secs, 3) << " s)" << std::endl;
        outcomes[c.id] = o;
    }
    int failed = 0;
    for (const auto& [id, o] : outcomes) failed += !o.passed;
    std::cout << (outcomes.size() - failed) << "/" << outcomes.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
