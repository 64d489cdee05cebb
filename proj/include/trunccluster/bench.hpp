// Multi-seed benchmark suites over generated grid data.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trunccluster/datagen.hpp"
#include "trunccluster/report.hpp"
#include "trunccluster/runner.hpp"

namespace trunccluster {

struct VariantSpec {
    Algorithm algorithm;
    std::size_t g;
};

struct BenchConfig {
    std::string suite = "birch-scaling";
    std::vector<std::size_t> sides{8, 16};
    std::size_t seeds = 5;
    std::vector<VariantSpec> variants{{Algorithm::var_kmeans_s, 5}, {Algorithm::var_gmm_s, 5}};
    bool explore = true;
    /// Unset: 5 initial E-steps for C >= 256, none below.
    std::optional<std::size_t> initial_esteps;
    std::size_t max_iters = 200;
    double tol = 1e-6;
    std::size_t samples_per_cluster = 100;
    std::uint64_t seed = 1;
};

struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;
};

/// Mean and standard error of the mean (sample standard deviation / sqrt(n)).
MeanSem mean_sem(const std::vector<double>& values);

struct VariantResult {
    VariantSpec spec;
    std::size_t c_prime = 0;
    std::size_t initial_esteps = 0;
    bool explore = false;
    /// Parity of the seed-averaged trace against the averaged baseline.
    std::optional<std::size_t> parity_iteration;
    std::vector<std::optional<std::size_t>> per_seed_parity;
    MeanSem parity;  // over the seeds that reached parity
    MeanSem final_quantization_error;
    double speedup_theoretical = 0.0;
    MeanSem speedup_measured;
    std::vector<RunTrace> traces;
};

struct SizeResult {
    std::size_t side = 0;
    std::size_t n_clusters = 0;
    std::size_t n_points = 0;
    MeanSem baseline_iterations;
    MeanSem baseline_final_quantization_error;
    double baseline_evals_per_iteration = 0.0;
    std::vector<RunTrace> baseline_traces;
    std::vector<VariantResult> variants;
};

struct BenchReport {
    BenchConfig config;
    std::vector<SizeResult> sizes;
};

/// Runs standard k-means and every configured variant for each grid size and
/// seed. Throws std::invalid_argument for an unknown suite name.
BenchReport run_bench(const BenchConfig& config, const RunOptions& options = {});

nlohmann::json bench_to_json(const BenchReport& report);

}  // namespace trunccluster
