#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "baselines.hpp"
#include "core_model.hpp"
#include "datagen.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "orkmc.hpp"
#include "rkmc.hpp"

/**
 * @file cli.hpp
 * @brief `orkm` command line: fit, stream, simulate, eval and bench.
 *
 * Exit codes: 0 success, 1 runtime or data error, 2 usage error.
 */
namespace orkm::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline const std::vector<std::string>& algorithms() {
    static const std::vector<std::string> names{"rkmc", "orkmc", "kmeans", "pkmeans", "ogd", "omu"};
    return names;
}

/// Fixed-point with 7 decimals, the metric format of eval and bench.
inline std::string fixed7(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.7f", x);
    return buf;
}

struct FitArgs {
    std::string algo = "rkmc";
    std::string data;
    int k = 2;
    double yita = 0.0;
    double r = 2.0;
    double gamma = 0.0;
    double epsilon = 1e-4;
    int chushi = 0;
    int max_iter = 100;
    std::uint64_t seed = 0;
    std::string out;
    CLI::Option* gamma_opt = nullptr;
    CLI::Option* chushi_opt = nullptr;

    HyperParams hyper() const {
        HyperParams h;
        h.k = k;
        h.eta = yita;
        h.r = r;
        if (gamma_opt && gamma_opt->count() > 0) h.gamma = gamma;
        h.epsilon = epsilon;
        h.max_iter = max_iter;
        if (chushi_opt && chushi_opt->count() > 0) h.chushi = chushi;
        h.seed = seed;
        return h;
    }
};

inline void add_fit_flags(CLI::App& cmd, FitArgs& a, bool require_algo) {
    auto* algo = cmd.add_option("--algo", a.algo, "solver")->check(CLI::IsMember(algorithms()));
    if (require_algo) algo->required();
    cmd.add_option("--data", a.data, "dataset manifest (JSON)")->required();
    cmd.add_option("--k,-K", a.k, "number of clusters")->required();
    cmd.add_option("--yita,--eta", a.yita, "regularization parameter")->capture_default_str();
    cmd.add_option("--r", a.r, "view balance exponent")->capture_default_str();
    a.gamma_opt = cmd.add_option("--gamma", a.gamma, "online step size (default 1/L)");
    cmd.add_option("--epsilon", a.epsilon, "stopping threshold")->capture_default_str();
    a.chushi_opt = cmd.add_option("--chushi,--init-size", a.chushi, "initial batch size (default max(K, N/2))");
    cmd.add_option("--max-iter", a.max_iter, "iteration cap")->capture_default_str();
    cmd.add_option("--seed", a.seed, "random seed")->capture_default_str();
    cmd.add_option("--out", a.out, "result JSON path")->required();
}

inline ClusterResult fit_algorithm(const std::string& algo, const MultiViewDataset& data, const HyperParams& hyper) {
    hyper.check();
    ClusterResult result;
    if (algo == "rkmc") {
        RkmcConfig cfg;
        cfg.hyper = hyper;
        result = rkmc_fit(data, cfg);
    } else if (algo == "orkmc") {
        result = orkmc_run(data, hyper);
    } else if (algo == "kmeans") {
        result = kmeans_fit(data, hyper.k, hyper.max_iter, hyper.epsilon, hyper.seed);
    } else if (algo == "pkmeans") {
        result = pkmeans_fit(data, hyper.k, PowerSchedule{}, hyper.max_iter, hyper.seed);
    } else if (algo == "ogd") {
        result = ogd_fit(data, hyper.k, GammaSchedule{hyper.gamma}, resolve_chushi(hyper, data.num_rows()), hyper.seed);
    } else if (algo == "omu") {
        result = omu_fit(data, hyper.k, resolve_chushi(hyper, data.num_rows()), hyper.max_iter, hyper.seed);
    } else {
        throw UsageError("unknown algorithm '" + algo + "'");
    }
    result.hyper = hyper;
    return result;
}

/// One line; elapsed time comes last so it can be masked when diffing runs.
inline std::string summary_line(const ClusterResult& result, const MultiViewDataset& data) {
    std::string line = "algo=" + result.algorithm + " n=" + std::to_string(data.num_rows()) +
                       " k=" + std::to_string(result.hyper.k) + " views=" + std::to_string(data.num_views()) +
                       " iterations=" + std::to_string(result.diagnostics.iterations) +
                       " converged=" + (result.diagnostics.converged ? "true" : "false");
    if (!result.objective_trace.empty()) line += " objective=" + io::format_double(result.objective_trace.back());
    if (data.labels) {
        const auto& pred = result.assignment.hard_labels;
        line += " nmi=" + fixed7(nmi(pred, *data.labels)) + " purity=" + fixed7(purity(pred, *data.labels)) +
                " fscore=" + fixed7(pair_scores(pred, *data.labels).fscore);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, " elapsed=%.6f", result.elapsed_seconds);
    return line + buf;
}

inline int cmd_fit(const FitArgs& a, std::ostream& out) {
    const auto data = io::load(fs::path(a.data));
    const auto result = fit_algorithm(a.algo, data, a.hyper());
    io::save_result(result, a.out);
    out << summary_line(result, data) << '\n';
    return kExitOk;
}

struct StreamArgs {
    FitArgs fit;
    std::size_t chunk_size = 1;
    std::size_t emit_every = 1;
};

/**
 * Progress CSV `t,objective,alpha_1..alpha_V` on `out`: the warm-start row, then one row
 * every emit_every arrivals and one at the last arrival. The summary goes to `err`.
 */
inline int cmd_stream(const StreamArgs& a, std::ostream& out, std::ostream& err) {
    if (a.fit.algo != "orkmc") throw UsageError("stream supports --algo orkmc only");
    if (a.emit_every < 1) throw UsageError("--emit-every must be >= 1");
    if (a.chunk_size < 1) throw UsageError("--chunk-size must be >= 1");
    const auto data = io::load(fs::path(a.fit.data));
    const auto n = data.num_rows();
    out << "t,objective";
    for (std::size_t v = 1; v <= data.num_views(); ++v) out << ",alpha_" << v;
    out << '\n';

    auto emit = [&](const OnlineState& s) {
        if (s.counters.steps != 0 && s.counters.steps % a.emit_every != 0 && s.t != n) return;
        out << s.t << ',' << io::format_double(online_objective_estimate(s));
        for (Eigen::Index v = 0; v < s.weights.alpha.size(); ++v) out << ',' << io::format_double(s.weights.alpha(v));
        out << '\n';
    };
    auto result = orkmc_run(data, a.fit.hyper(), a.chunk_size, OnlineOptions{}, emit);
    io::save_result(result, a.fit.out);
    out.flush();
    err << summary_line(result, data) << '\n';
    return kExitOk;
}

struct SimulateArgs {
    std::string preset;
    SimSpec spec;
    std::string out_dir;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    SimSpec spec = a.spec;
    std::vector<int> grid;
    if (!a.preset.empty()) {
        const Preset p = preset(a.preset);
        spec = p.spec;
        spec.seed = a.spec.seed;
        grid = p.n_grid;
    }
    try {
        spec.check();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const fs::path dir(a.out_dir);
    if (grid.empty()) {
        const auto data = generate(spec);
        io::save_dataset(data, dir);
        out << "wrote " << data.num_rows() << " rows x " << data.num_views() << " views to " << dir.string() << '\n';
        return kExitOk;
    }
    for (int n : grid) {
        SimSpec s = spec;
        s.n = n;
        const auto data = generate(s);
        const fs::path sub = dir / ("n" + std::to_string(n));
        io::save_dataset(data, sub);
        out << "wrote " << data.num_rows() << " rows x " << data.num_views() << " views to " << sub.string() << '\n';
    }
    return kExitOk;
}

struct EvalArgs {
    std::string pred;
    std::string truth;
    std::string metric = "all";
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto pred = io::read_labels(a.pred);
    const auto truth = io::read_labels(a.truth);
    const bool all = a.metric == "all";
    if (all || a.metric == "nmi") out << "nmi," << fixed7(nmi(pred, truth)) << '\n';
    if (all || a.metric == "purity") out << "purity," << fixed7(purity(pred, truth)) << '\n';
    const bool pairs = all || a.metric == "precision" || a.metric == "recall" || a.metric == "fscore" || a.metric == "ri";
    if (!pairs) return kExitOk;
    const auto s = pair_scores(pred, truth);
    if (all || a.metric == "precision") out << "precision," << fixed7(s.precision) << '\n';
    if (all || a.metric == "recall") out << "recall," << fixed7(s.recall) << '\n';
    if (all || a.metric == "fscore") out << "fscore," << fixed7(s.fscore) << '\n';
    if (all || a.metric == "ri") out << "ri," << fixed7(s.rand_index) << '\n';
    return kExitOk;
}

struct BenchRow {
    std::string dataset;
    std::string algorithm;
    std::string view;
    double nmi = 0.0;
    double purity = 0.0;
    double fscore = 0.0;
    double elapsed_seconds = 0.0;
    std::string seed;
};

inline std::string bench_header() { return "dataset,algorithm,view,nmi,purity,fscore,elapsed_seconds,seed"; }

inline std::string to_csv(const BenchRow& r) {
    char elapsed[64];
    std::snprintf(elapsed, sizeof elapsed, "%.6f", r.elapsed_seconds);
    return r.dataset + ',' + r.algorithm + ',' + r.view + ',' + fixed7(r.nmi) + ',' + fixed7(r.purity) + ',' +
           fixed7(r.fscore) + ',' + elapsed + ',' + r.seed;
}

struct BenchSuite {
    std::string name;
    HyperParams hyper;
    /// Simulation suites regenerate the data from each seed; real-data suites load once.
    std::optional<Preset> preset;
    std::optional<MultiViewDataset> data;
};

/// Suite definition, or nullopt when its dataset file is absent.
inline std::optional<BenchSuite> bench_suite(const std::string& name) {
    BenchSuite suite;
    suite.name = name;
    if (name == "case1-single" || name == "case2-multi") {
        const Preset p = preset(name);
        suite.hyper.k = p.spec.k;
        suite.hyper.eta = p.eta;
        suite.hyper.chushi = p.chushi;
        suite.preset = p;
        return suite;
    }
    if (name == "qcm") {
        const auto path = io::find_qcm();
        if (!path) return std::nullopt;
        suite.data = io::load_qcm(*path);
        suite.hyper.k = 5;
        suite.hyper.eta = 110.0;
        suite.hyper.r = 0.5;
        suite.hyper.max_iter = 1000;
        return suite;
    }
    if (name == "movie") {
        const auto path = io::find_movie_manifest();
        if (!path) return std::nullopt;
        suite.data = io::load(*path);
        suite.hyper.k = 17;
        suite.hyper.chushi = 600;
        suite.hyper.r = 0.5;
        suite.hyper.gamma = 1e-5;
        suite.hyper.epsilon = 1.0;
        suite.hyper.eta = 0.5;
        suite.hyper.max_iter = 10;
        return suite;
    }
    throw UsageError("unknown suite '" + name + "'; valid suites: case1-single, case2-multi, qcm, movie");
}

inline MultiViewDataset single_view(const MultiViewDataset& data, std::size_t v) {
    MultiViewDataset out;
    out.views.push_back(data.views[v]);
    out.labels = data.labels;
    out.name = data.name + "-view" + std::to_string(v + 1);
    return out;
}

inline double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/**
 * Every algorithm on every seed (1..seeds). Single-view algorithms run once per view on
 * multi-view data; the others see all views. Rows are grouped by algorithm and view in a
 * fixed order, seeds ascending, each group closed by its median row.
 */
inline std::vector<BenchRow> run_bench(const BenchSuite& suite, int seeds) {
    std::map<std::pair<std::size_t, std::string>, std::vector<BenchRow>> groups;
    for (int seed = 1; seed <= seeds; ++seed) {
        MultiViewDataset data;
        if (suite.preset) {
            SimSpec spec = suite.preset->spec;
            spec.seed = static_cast<std::uint64_t>(seed);
            data = generate(spec);
        } else {
            data = *suite.data;
        }
        HyperParams hyper = suite.hyper;
        hyper.seed = static_cast<std::uint64_t>(seed);
        const auto& truth = *data.labels;
        for (std::size_t a = 0; a < algorithms().size(); ++a) {
            const auto& algo = algorithms()[a];
            const bool per_view = data.num_views() > 1 && (algo == "pkmeans" || algo == "ogd");
            std::vector<std::pair<std::string, MultiViewDataset>> inputs;
            if (per_view) {
                for (std::size_t v = 0; v < data.num_views(); ++v) inputs.emplace_back(std::to_string(v + 1), single_view(data, v));
            } else {
                inputs.emplace_back(data.num_views() == 1 ? "1" : "all", data);
            }
            for (const auto& [view, input] : inputs) {
                const auto result = fit_algorithm(algo, input, hyper);
                const auto& pred = result.assignment.hard_labels;
                BenchRow row{suite.name, algo, view, nmi(pred, truth), purity(pred, truth),
                             pair_scores(pred, truth).fscore, result.elapsed_seconds, std::to_string(seed)};
                groups[{a, view}].push_back(std::move(row));
            }
        }
    }
    std::vector<BenchRow> rows;
    for (const auto& [key, group] : groups) {
        std::vector<double> n, p, f, t;
        for (const auto& row : group) {
            rows.push_back(row);
            n.push_back(row.nmi);
            p.push_back(row.purity);
            f.push_back(row.fscore);
            t.push_back(row.elapsed_seconds);
        }
        rows.push_back(BenchRow{suite.name, group.front().algorithm, key.second, median(n), median(p), median(f), median(t),
                                "median"});
    }
    return rows;
}

struct BenchArgs {
    std::string suite;
    int seeds = 5;
    std::string out;
};

inline int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    if (a.seeds < 1) throw UsageError("--seeds must be >= 1");
    const auto suite = bench_suite(a.suite);
    std::ofstream file(a.out, std::ios::binary);
    if (!file) throw IoError("cannot write " + a.out);
    file << bench_header() << '\n';
    if (!suite) {
        file << a.suite << ",SKIPPED,,,,,,\n";
        err << a.suite << ": dataset not found under $ORKM_DATA_DIR or ./data; skipped\n";
        return kExitOk;
    }
    const auto rows = run_bench(*suite, a.seeds);
    for (const auto& row : rows) file << to_csv(row) << '\n';
    if (!file) throw IoError("write failed for " + a.out);

    out << "algorithm,view,nmi,purity,fscore\n";
    for (const auto& row : rows)
        if (row.seed == "median")
            out << row.algorithm << ',' << row.view << ',' << fixed7(row.nmi) << ',' << fixed7(row.purity) << ','
                << fixed7(row.fscore) << '\n';
    out << "dmc,external,,,\n";
    return kExitOk;
}

/// Parses argv and dispatches. Never throws; errors are reported on `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Regularized and online regularized K-means for multi-view data", "orkm"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit one solver and write the result JSON");
    add_fit_flags(*fit_cmd, fit, true);

    StreamArgs stream;
    stream.fit.algo = "orkmc";
    auto* stream_cmd = app.add_subcommand("stream", "run ORKMC in arrival order with a progress CSV on stdout");
    add_fit_flags(*stream_cmd, stream.fit, false);
    stream_cmd->add_option("--chunk-size", stream.chunk_size, "arrivals per reporting chunk")->capture_default_str();
    stream_cmd->add_option("--emit-every", stream.emit_every, "arrivals between progress rows")->capture_default_str();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "write a simulated dataset");
    auto* preset_opt = sim_cmd->add_option("--preset", sim.preset, "case1-single, case2-multi, stability-single, stability-multi");
    for (auto* o : {sim_cmd->add_option("--n", sim.spec.n), sim_cmd->add_option("--k", sim.spec.k),
                    sim_cmd->add_option("--v", sim.spec.v), sim_cmd->add_option("--j", sim.spec.j),
                    sim_cmd->add_option("--separation", sim.spec.separation)})
        o->excludes(preset_opt)->capture_default_str();
    sim_cmd->add_option("--seed", sim.spec.seed)->capture_default_str();
    sim_cmd->add_option("--out-dir", sim.out_dir)->required();

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "score predicted labels against the truth");
    eval_cmd->add_option("--pred", eval.pred)->required();
    eval_cmd->add_option("--truth", eval.truth)->required();
    eval_cmd->add_option("--metric", eval.metric)
        ->check(CLI::IsMember({"nmi", "purity", "precision", "recall", "fscore", "ri", "all"}))
        ->capture_default_str();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "run every solver over seeds and write a comparison CSV");
    bench_cmd->add_option("--suite", bench.suite)->required();
    bench_cmd->add_option("--seeds", bench.seeds)->capture_default_str();
    bench_cmd->add_option("--out", bench.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit, out);
        if (*stream_cmd) return cmd_stream(stream, out, err);
        if (*sim_cmd) return cmd_simulate(sim, out);
        if (*eval_cmd) return cmd_eval(eval, out);
        if (*bench_cmd) return cmd_bench(bench, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace orkm::cli
