// dcm-lab: batch experiments and single-shot tools for directed configuration models.
//
// Exit codes: 0 ok, 1 experiment assertion or stage failure, 2 input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dcmlab/dcmlab.hpp"

namespace fs = std::filesystem;
using namespace dcmlab;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInput = 2;

struct GraphSource {
    std::string graph;
    std::string model;
    std::uint32_t n = 0;
    std::uint64_t seed = 1;
    bool simple = false;

    void add(CLI::App* app) {
        app->add_option("--graph", graph, "graph file (.bin dump or text edge list)");
        app->add_option("--model", model, "model JSON (used when --graph is absent)");
        app->add_option("-n,--n", n, "number of vertices");
        app->add_option("--seed", seed, "generation seed");
        app->add_flag("--simple", simple, "reject multigraphs");
    }

    MultiDigraph load() const {
        if (!graph.empty()) {
            std::ifstream in(graph, std::ios::binary);
            if (!in) throw InputError("cannot open graph " + graph);
            return fs::path(graph).extension() == ".bin" ? read_graph_binary(in) : read_edge_list(in);
        }
        if (model.empty() || n == 0) throw InputError("need --graph or both --model and --n");
        const auto mat = materialize(load_model(model), n, BalanceMode::Reject, false);
        return simple ? generate_simple(mat.sequence, seed) : generate(mat.sequence, seed);
    }
};

std::ofstream open_out(const fs::path& p, bool binary = false) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) throw InputError("cannot write " + p.string());
    return out;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir, unsigned threads) {
    const auto cfg = load_config(config_path);
    OutputCollector files;
    const auto result = run_experiment(cfg, files, threads);
    const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(cfg.output);
    files.write_all(dir);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : result.failures) std::cerr << "stage failed: " << f << "\n";
    for (const auto& c : result.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.field << " = "
                  << (c.value ? format_double(*c.value) : std::string("missing")) << "\n";
    std::cout << "wrote " << files.files().size() << " files to " << dir.string() << "\n";
    return result.exit_code() == 0 ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dcm-lab: directed configuration model experiments"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: DCMLAB_THREADS or all cores)");

    auto* run = app.add_subcommand("run", "run an experiment config");
    std::string config;
    std::optional<std::string> out_dir;
    run->add_option("--config", config, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker threads");

    auto* gen = app.add_subcommand("gen", "generate a graph");
    GraphSource gen_src;
    std::string gen_out;
    gen->add_option("--model", gen_src.model, "model JSON")->required();
    gen->add_option("-n,--n", gen_src.n, "number of vertices")->required();
    gen->add_option("--seed", gen_src.seed, "generation seed");
    gen->add_flag("--simple", gen_src.simple, "reject multigraphs");
    gen->add_option("--out", gen_out, "output file; .bin gives the binary dump, anything else an edge list")->required();

    auto* pi = app.add_subcommand("pi", "stationary distribution");
    GraphSource pi_src;
    pi_src.add(pi);
    std::string pi_out;
    pi->add_option("--out", pi_out, "output prefix; writes <prefix>.bin and <prefix>.csv")->required();
    double tolerance = 1e-12;
    pi->add_option("--tolerance", tolerance, "L1 successive-difference tolerance");

    auto* cover = app.add_subcommand("cover", "Monte Carlo cover times");
    GraphSource cover_src;
    cover_src.add(cover);
    Vertex start = 0;
    std::uint64_t trials = 100, walk_seed = 1;
    std::optional<std::uint64_t> step_cap;
    std::string cover_out;
    cover->add_option("--start", start, "start vertex");
    cover->add_option("--trials", trials, "number of walks");
    cover->add_option("--walk-seed", walk_seed, "walk seed");
    cover->add_option("--step-cap", step_cap, "per-trial step cap (default 50 n log^2 n)");
    cover->add_option("--out", cover_out, "per-trial CSV")->required();

    auto* rde = app.add_subcommand("rde", "population dynamics and tail fit");
    std::string rde_model, rde_out;
    std::uint64_t pool = 1000000, rounds = 60, samples = 1000000, rde_seed = 1;
    rde->add_option("--model", rde_model, "model JSON")->required();
    rde->add_option("--pool", pool, "pool size");
    rde->add_option("--rounds", rounds, "iteration rounds");
    rde->add_option("--samples", samples, "X samples for the tail fit");
    rde->add_option("--seed", rde_seed, "seed");
    rde->add_option("--out", rde_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (*run) return cmd_run(config, out_dir, threads);
        if (*gen) {
            const auto g = gen_src.load();
            const fs::path p = gen_out;
            auto out = open_out(p, p.extension() == ".bin");
            if (p.extension() == ".bin")
                write_graph_binary(out, g);
            else
                write_edge_list(out, g);
            std::cout << "n=" << g.n() << " m=" << g.m() << " simple=" << g.simple() << "\n";
            return kOk;
        }
        if (*pi) {
            const auto g = pi_src.load();
            SolveOptions opt;
            opt.tolerance = tolerance;
            const auto st = solve(g, opt);
            auto bin = open_out(pi_out + ".bin", true);
            write_pi_binary(bin, st.pi);
            auto csv = open_out(pi_out + ".csv");
            write_pi_csv(csv, st.pi);
            std::cout << "method=" << to_string(st.method) << " iterations=" << st.iterations
                      << " residual=" << format_double(st.residual) << " n*pi_min=" << format_double(g.n() * st.pi_min)
                      << " n*pi_max=" << format_double(g.n() * st.pi_max) << "\n";
            return kOk;
        }
        if (*cover) {
            const auto g = cover_src.load();
            const auto s = simulate_cover(g, start, trials, walk_seed, step_cap, threads);
            auto out = open_out(cover_out);
            write_trials_csv(out, s);
            std::cout << "mean=" << format_double(s.summary.mean) << " ci=[" << format_double(s.summary.ci_low) << ", "
                      << format_double(s.summary.ci_high) << "] censored=" << s.censored_count << "\n";
            return kOk;
        }
        if (*rde) {
            const auto model = load_model(rde_model);
            const auto pop = iterate(make_population(model, pool, rde_seed), rounds, threads);
            const auto xs = sample_x(pop, samples, rde_seed, threads);
            const fs::path dir = rde_out;
            auto snap = open_out(dir / "pool.bin", true);
            write_pool_binary(snap, pop);
            const auto fit = fit_left_tail(xs);
            auto js = open_out(dir / "tailfit.json");
            js << tail_fit_to_json(fit, true).dump(2) << "\n";
            std::cout << "alpha_hat=" << format_double(fit.exponent) << " r2=" << format_double(fit.r2) << "\n";
            return kOk;
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kOk;
}
