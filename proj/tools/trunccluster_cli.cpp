// Command-line front end: dataset generation, single runs and benchmark suites.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trunccluster/bench.hpp"
#include "trunccluster/datagen.hpp"
#include "trunccluster/report.hpp"
#include "trunccluster/runner.hpp"

namespace tc = trunccluster;
namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParallelFlags {
    unsigned threads = 0;
    bool deterministic = false;

    tc::RunOptions options() const {
        tc::RunOptions opts;
        unsigned n = threads;
        if (n == 0) {
            if (const char* env = std::getenv("TRUNCCLUSTER_THREADS")) n = static_cast<unsigned>(std::atoi(env));
        }
        if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
        opts.exec.threads = deterministic ? 1 : n;
        opts.record_wall_time = !deterministic;
        return opts;
    }
};

void add_parallel_flags(CLI::App* cmd, ParallelFlags& flags) {
    cmd->add_option("--threads", flags.threads,
                    "Worker threads (0: $TRUNCCLUSTER_THREADS, else hardware concurrency)")
        ->capture_default_str();
    cmd->add_flag("--deterministic", flags.deterministic,
                  "Serial execution and no wall-clock fields, for byte-identical outputs");
}

struct GenerateArgs {
    std::size_t side = 0;
    std::size_t samples = 100;
    double sigma_sq = 1.0;
    double spacing = 4.0 * std::sqrt(2.0);
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_generate(const GenerateArgs& args) {
    tc::BirchSpec spec;
    spec.grid_side = args.side;
    spec.samples_per_cluster = args.samples;
    spec.cluster_sigma_sq = args.sigma_sq;
    spec.spacing = args.spacing;
    spec.seed = args.seed;
    tc::BirchData birch = [&] {
        try {
            return tc::generate_birch(spec);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    tc::write_csv(args.out, birch.data.points());

    nlohmann::json side;
    side["schema"] = tc::kSchemaVersion;
    side["grid_side"] = spec.grid_side;
    side["clusters"] = spec.n_clusters();
    side["samples_per_cluster"] = spec.samples_per_cluster;
    side["sigma_sq"] = spec.cluster_sigma_sq;
    side["spacing"] = spec.spacing;
    side["seed"] = spec.seed;
    nlohmann::json centers = nlohmann::json::array();
    for (std::size_t c = 0; c < birch.centers.rows(); ++c)
        centers.push_back({birch.centers(c, 0), birch.centers(c, 1)});
    side["centers"] = centers;
    fs::path sidecar(args.out);
    sidecar.replace_extension(".centers.json");
    tc::write_text_file(sidecar, side.dump(2) + "\n");
    std::cout << "wrote " << args.out << " (" << spec.n_points() << "x2) and " << sidecar.string() << "\n";
    return 0;
}

struct RunArgs {
    std::string algorithm;
    std::string input;
    std::string format = "csv";
    bool standardize = false;
    std::size_t clusters = 0;
    std::size_t g = 0;
    std::size_t c_prime = 0;
    bool explore = false;
    std::size_t init_esteps = 0;
    std::size_t max_iters = 200;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    std::string out_prefix;
    bool with_loglik = false;
    std::string baseline_trace;
    ParallelFlags parallel;
};

int cmd_run(const RunArgs& args) {
    const auto alg = tc::parse_algorithm(args.algorithm);
    if (!alg) throw UsageError("unknown algorithm '" + args.algorithm + "'");
    tc::RunConfig config;
    config.algorithm = *alg;
    config.n_clusters = args.clusters;
    config.g = args.g;
    config.c_prime = args.c_prime;
    config.explore = args.explore;
    config.initial_esteps = args.init_esteps;
    config.max_iters = args.max_iters;
    config.tol = args.tol;
    config.seed = args.seed;
    config.with_loglik = args.with_loglik;

    auto data = tc::load_matrix(args.input, args.format == "csv" ? tc::MatrixFormat::csv
                                                                   : tc::MatrixFormat::whitespace);
    if (args.standardize) data = tc::standardize(data);
    try {
        config = tc::resolve_config(config, data.n_points());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto result = tc::run(config, data, args.parallel.options());

    tc::SummaryExtras extras;
    extras.input = args.input;
    if (!args.baseline_trace.empty()) {
        const auto baseline = tc::trace_from_jsonl(tc::read_text_file(args.baseline_trace));
        extras.parity_evaluated = true;
        extras.parity_iteration = tc::iterations_to_parity({result.trace}, {baseline});
        if (result.trace.records.size() > 1 && baseline.records.size() > 1)
            extras.speedup = tc::speedup_report(result.trace, baseline);
    }
    tc::write_text_file(args.out_prefix + ".trace.jsonl", tc::trace_to_jsonl(result.trace));
    tc::write_text_file(args.out_prefix + ".summary.json",
                        tc::run_summary(config, result, data.dims(), extras).dump(2) + "\n");
    const auto& last = result.trace.records.back();
    std::cout << tc::algorithm_name(config.algorithm) << ": " << result.trace.records.size() - 1
              << " iterations, quantization error " << last.quantization_error
              << (result.converged ? " (converged)" : "") << "\n";
    return 0;
}

struct BenchArgs {
    std::string suite = "birch-scaling";
    std::vector<std::size_t> sides{8, 16};
    std::size_t seeds = 5;
    std::string variants = "var-kmeans-s:5,var-gmm-s:5";
    bool no_explore = false;
    int init_esteps = -1;
    std::size_t max_iters = 200;
    double tol = 1e-6;
    std::size_t samples = 100;
    std::uint64_t seed = 1;
    std::string out;
    bool write_traces = false;
    ParallelFlags parallel;
};

std::vector<tc::VariantSpec> parse_variants(const std::string& text) {
    std::vector<tc::VariantSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("variant '" + item + "' must look like ALGORITHM:G");
        const auto alg = tc::parse_algorithm(item.substr(0, colon));
        if (!alg || !tc::is_variational(*alg)) throw UsageError("unknown variational algorithm in '" + item + "'");
        try {
            out.push_back({*alg, static_cast<std::size_t>(std::stoul(item.substr(colon + 1)))});
        } catch (const std::exception&) {
            throw UsageError("bad G in variant '" + item + "'");
        }
    }
    return out;
}

int cmd_bench(const BenchArgs& args) {
    if (args.suite != "birch-scaling") throw UsageError("unknown suite '" + args.suite + "' (known: birch-scaling)");
    tc::BenchConfig config;
    config.suite = args.suite;
    config.sides = args.sides;
    config.seeds = args.seeds;
    config.variants = parse_variants(args.variants);
    config.explore = !args.no_explore;
    if (args.init_esteps >= 0) config.initial_esteps = static_cast<std::size_t>(args.init_esteps);
    config.max_iters = args.max_iters;
    config.tol = args.tol;
    config.samples_per_cluster = args.samples;
    config.seed = args.seed;

    tc::BenchReport report = [&] {
        try {
            return tc::run_bench(config, args.parallel.options());
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();

    fs::create_directories(args.out);
    const fs::path dir(args.out);
    tc::write_text_file(dir / "report.json", tc::bench_to_json(report).dump(2) + "\n");
    if (args.write_traces) {
        for (const auto& size : report.sizes) {
            const std::string base = "side" + std::to_string(size.side) + "_";
            for (std::size_t s = 0; s < size.baseline_traces.size(); ++s)
                tc::write_text_file(dir / (base + "kmeans_seed" + std::to_string(s) + ".trace.jsonl"),
                                    tc::trace_to_jsonl(size.baseline_traces[s]));
            for (const auto& v : size.variants)
                for (std::size_t s = 0; s < v.traces.size(); ++s)
                    tc::write_text_file(dir / (base + std::string(tc::algorithm_name(v.spec.algorithm)) + "_g" +
                                               std::to_string(v.spec.g) + "_seed" + std::to_string(s) +
                                               ".trace.jsonl"),
                                        tc::trace_to_jsonl(v.traces[s]));
        }
    }
    for (const auto& size : report.sizes) {
        std::cout << "C=" << size.n_clusters << " kmeans iterations " << size.baseline_iterations.mean << "\n";
        for (const auto& v : size.variants) {
            std::cout << "  " << tc::algorithm_name(v.spec.algorithm) << " G=" << v.spec.g << " parity ";
            if (v.parity_iteration)
                std::cout << *v.parity_iteration;
            else
                std::cout << "not reached";
            std::cout << ", speedup " << v.speedup_theoretical << " / " << v.speedup_measured.mean << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Truncated variational EM clustering: GMM and k-means with partial E-steps"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a grid-of-Gaussians dataset as CSV");
    generate->add_option("--birch-side", gen.side, "Grid side; C = side^2")->required();
    generate->add_option("--samples", gen.samples, "Samples per cluster")->capture_default_str();
    generate->add_option("--sigma", gen.sigma_sq, "Per-dimension cluster variance")->capture_default_str();
    generate->add_option("--spacing", gen.spacing, "Distance between adjacent centres")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    generate->add_option("--out", gen.out, "Output CSV path (centres go to <stem>.centers.json)")->required();

    RunArgs ra;
    auto* runcmd = app.add_subcommand("run", "Train one model and write a trace and a summary");
    runcmd->add_option("--algorithm", ra.algorithm,
                       "gmm, kmeans, var-gmm-x, var-gmm-s, var-kmeans-x or var-kmeans-s")
        ->required();
    runcmd->add_option("--input", ra.input, "Data file")->required();
    runcmd->add_option("--format", ra.format, "Input format")
        ->check(CLI::IsMember({"csv", "whitespace"}))
        ->capture_default_str();
    runcmd->add_flag("--standardize", ra.standardize, "Z-score every input dimension");
    runcmd->add_option("--clusters", ra.clusters, "Number of clusters C")->required();
    runcmd->add_option("--g", ra.g, "Neighborhood size G (variational algorithms)")->capture_default_str();
    runcmd->add_option("--cprime", ra.c_prime, "Truncation size C' (0: G for var-GMM, 1 for var-k-means)")
        ->capture_default_str();
    runcmd->add_flag("--explore", ra.explore, "Add one random exploratory cluster to every search space");
    runcmd->add_option("--init-esteps", ra.init_esteps, "E-only iterations before the first M-step")
        ->capture_default_str();
    runcmd->add_option("--max-iters", ra.max_iters, "Iteration cap, initial E-steps included")->capture_default_str();
    runcmd->add_option("--tol", ra.tol, "Relative quantization-error change treated as converged")
        ->capture_default_str();
    runcmd->add_option("--seed", ra.seed, "Random seed")->capture_default_str();
    runcmd->add_option("--out-prefix", ra.out_prefix, "Writes <prefix>.trace.jsonl and <prefix>.summary.json")
        ->required();
    runcmd->add_flag("--with-loglik", ra.with_loglik, "Also record the log-likelihood per iteration");
    runcmd->add_option("--baseline-trace", ra.baseline_trace,
                       "Baseline trace (JSONL) for parity and speedup fields in the summary");
    add_parallel_flags(runcmd, ra.parallel);

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Multi-seed benchmark suite");
    bench->add_option("--suite", ba.suite, "Suite name (birch-scaling)")->capture_default_str();
    bench->add_option("--sides", ba.sides, "Grid sides, comma separated")->delimiter(',')->capture_default_str();
    bench->add_option("--seeds", ba.seeds, "Independent runs per configuration")->capture_default_str();
    bench->add_option("--variants", ba.variants, "Comma-separated ALGORITHM:G list")->capture_default_str();
    bench->add_flag("--no-explore", ba.no_explore, "Disable the exploratory cluster");
    bench->add_option("--init-esteps", ba.init_esteps, "Initial E-steps (-1: 5 when C >= 256, else 0)")
        ->capture_default_str();
    bench->add_option("--max-iters", ba.max_iters, "Iteration cap")->capture_default_str();
    bench->add_option("--tol", ba.tol, "Convergence tolerance")->capture_default_str();
    bench->add_option("--samples", ba.samples, "Samples per cluster")->capture_default_str();
    bench->add_option("--seed", ba.seed, "Base seed")->capture_default_str();
    bench->add_option("--out", ba.out, "Output directory (report.json)")->required();
    bench->add_flag("--write-traces", ba.write_traces, "Also write every run's trace");
    add_parallel_flags(bench, ba.parallel);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*runcmd) return cmd_run(ra);
        if (*bench) return cmd_bench(ba);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
