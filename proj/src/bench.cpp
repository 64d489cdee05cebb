#include "trunccluster/bench.hpp"

#include <cmath>
#include <stdexcept>

#include "trunccluster/rng.hpp"

namespace trunccluster {

using nlohmann::json;

MeanSem mean_sem(const std::vector<double>& values) {
    MeanSem out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sem = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
    }
    return out;
}

BenchReport run_bench(const BenchConfig& config, const RunOptions& options) {
    if (config.suite != "birch-scaling") throw std::invalid_argument("unknown suite '" + config.suite + "'");
    if (config.seeds == 0) throw std::invalid_argument("bench needs at least one seed");

    BenchReport report{config, {}};
    for (std::size_t side : config.sides) {
        BirchSpec spec;
        spec.grid_side = side;
        spec.samples_per_cluster = config.samples_per_cluster;
        spec.seed = derive_seed(config.seed, side);
        const auto birch = generate_birch(spec, options.exec);

        SizeResult size;
        size.side = side;
        size.n_clusters = spec.n_clusters();
        size.n_points = spec.n_points();
        const std::size_t esteps = config.initial_esteps.value_or(size.n_clusters >= 256 ? 5 : 0);

        std::vector<double> iterations, finals;
        for (std::size_t s = 0; s < config.seeds; ++s) {
            RunConfig rc;
            rc.algorithm = Algorithm::kmeans_full;
            rc.n_clusters = size.n_clusters;
            rc.max_iters = config.max_iters;
            rc.tol = config.tol;
            rc.seed = config.seed + s;
            auto result = run(rc, birch.data, options);
            iterations.push_back(static_cast<double>(result.trace.records.size() - 1));
            finals.push_back(result.trace.records.back().quantization_error);
            size.baseline_traces.push_back(std::move(result.trace));
        }
        size.baseline_iterations = mean_sem(iterations);
        size.baseline_final_quantization_error = mean_sem(finals);
        size.baseline_evals_per_iteration = mean_evals_per_iteration(size.baseline_traces.front());

        for (const auto& variant : config.variants) {
            VariantResult vr;
            vr.spec = variant;
            vr.initial_esteps = esteps;
            vr.explore = config.explore;
            std::vector<double> parities, speedups, vfinals;
            for (std::size_t s = 0; s < config.seeds; ++s) {
                RunConfig rc;
                rc.algorithm = variant.algorithm;
                rc.n_clusters = size.n_clusters;
                rc.g = variant.g;
                rc.explore = config.explore;
                rc.initial_esteps = esteps;
                rc.max_iters = config.max_iters;
                rc.tol = config.tol;
                rc.seed = config.seed + s;
                auto result = run(rc, birch.data, options);
                vr.c_prime = result.trace.c_prime;
                const auto parity = iterations_to_parity({result.trace}, size.baseline_traces);
                vr.per_seed_parity.push_back(parity);
                if (parity) parities.push_back(static_cast<double>(*parity));
                const auto sp = speedup_report(result.trace, size.baseline_traces[s]);
                vr.speedup_theoretical = sp.theoretical_min;
                speedups.push_back(sp.measured);
                vfinals.push_back(result.trace.records.back().quantization_error);
                vr.traces.push_back(std::move(result.trace));
            }
            vr.parity_iteration = iterations_to_parity(vr.traces, size.baseline_traces);
            vr.parity = mean_sem(parities);
            vr.final_quantization_error = mean_sem(vfinals);
            vr.speedup_measured = mean_sem(speedups);
            size.variants.push_back(std::move(vr));
        }
        report.sizes.push_back(std::move(size));
    }
    return report;
}

namespace {

json mean_sem_json(const MeanSem& m) { return {{"mean", m.mean}, {"sem", m.sem}}; }

json optional_index(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json bench_to_json(const BenchReport& report) {
    const auto& cfg = report.config;
    json j;
    j["schema"] = kSchemaVersion;
    j["suite"] = cfg.suite;
    j["config"] = {{"sides", cfg.sides},
                   {"seeds", cfg.seeds},
                   {"explore", cfg.explore},
                   {"max_iters", cfg.max_iters},
                   {"tol", cfg.tol},
                   {"samples_per_cluster", cfg.samples_per_cluster},
                   {"seed", cfg.seed}};
    json sizes = json::array();
    for (const auto& size : report.sizes) {
        json s;
        s["side"] = size.side;
        s["clusters"] = size.n_clusters;
        s["n_points"] = size.n_points;
        s["baseline"] = {{"algorithm", "kmeans"},
                         {"iterations", mean_sem_json(size.baseline_iterations)},
                         {"final_quantization_error", mean_sem_json(size.baseline_final_quantization_error)},
                         {"data_to_cluster_evals_per_iteration", size.baseline_evals_per_iteration}};
        json variants = json::array();
        for (const auto& v : size.variants) {
            json per_seed = json::array();
            bool all_reached = true;
            for (const auto& p : v.per_seed_parity) {
                per_seed.push_back(optional_index(p));
                all_reached = all_reached && p.has_value();
            }
            variants.push_back({{"algorithm", std::string(algorithm_name(v.spec.algorithm))},
                                {"g", v.spec.g},
                                {"c_prime", v.c_prime},
                                {"explore", v.explore},
                                {"initial_esteps", v.initial_esteps},
                                {"parity_iteration", optional_index(v.parity_iteration)},
                                {"parity_reached", v.parity_iteration.has_value()},
                                {"per_seed_parity", per_seed},
                                {"all_seeds_reached_parity", all_reached},
                                {"parity", mean_sem_json(v.parity)},
                                {"final_quantization_error", mean_sem_json(v.final_quantization_error)},
                                {"speedup", {{"theoretical_min", v.speedup_theoretical},
                                             {"measured", mean_sem_json(v.speedup_measured)}}}});
        }
        s["variants"] = variants;
        sizes.push_back(s);
    }
    j["sizes"] = sizes;
    return j;
}

}  // namespace trunccluster
