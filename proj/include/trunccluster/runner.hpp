// Training runs for the six algorithms and the measurements taken on them.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trunccluster/core.hpp"
#include "trunccluster/parallel.hpp"
#include "trunccluster/var_estep.hpp"

namespace trunccluster {

enum class Algorithm { gmm_full, kmeans_full, var_gmm_x, var_gmm_s, var_kmeans_x, var_kmeans_s };

/// Canonical CLI spelling, e.g. "var-gmm-s".
std::string_view algorithm_name(Algorithm algorithm);
/// Accepts the canonical names plus "gmm", "kmeans" and underscore spellings.
std::optional<Algorithm> parse_algorithm(std::string_view name);

bool is_variational(Algorithm algorithm);
bool is_kmeans_family(Algorithm algorithm);
bool uses_estimated_neighbors(Algorithm algorithm);

struct RunConfig {
    Algorithm algorithm = Algorithm::kmeans_full;
    std::size_t n_clusters = 0;
    /// 0 means "derive from the algorithm".
    std::size_t c_prime = 0;
    std::size_t g = 0;
    bool explore = false;
    std::size_t initial_esteps = 0;
    /// Cap on iterations, initial E-steps included.
    std::size_t max_iters = 200;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    bool with_loglik = false;
};

/// Checks a configuration against N and fills in the derived sizes:
///   var-GMM:     C' = G, 1 <= G <= C
///   var-k-means: C' = 1, 1 < G <= C (G = C only reproduces Lloyd)
///   full runs:   C' = C for GMM, C' = 1 for k-means, G = C
/// Throws std::invalid_argument naming the violated constraint.
RunConfig resolve_config(RunConfig config, std::size_t n_points);

struct IterationRecord {
    std::size_t index = 0;
    double free_energy = 0.0;
    double quantization_error = 0.0;
    std::optional<double> log_likelihood;
    std::uint64_t data_to_cluster_evals = 0;
    std::uint64_t cluster_to_cluster_evals = 0;
    double wall_seconds = 0.0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Record 0 is the state after seeding and initialization; record t >= 1 is
/// the state after iteration t.
struct RunTrace {
    Algorithm algorithm = Algorithm::kmeans_full;
    std::size_t n_points = 0;
    std::size_t n_clusters = 0;
    std::size_t c_prime = 0;
    std::size_t g = 0;
    bool explore = false;
    std::vector<IterationRecord> records;
};

struct StepEvent {
    enum class Phase { estep, mstep };
    std::size_t iteration;
    Phase phase;
    double free_energy;
    const ModelParams& params;
    const TruncationState& trunc;
};

struct RunOptions {
    Executor exec;
    bool record_wall_time = true;
    /// Called after every E-step and every M-step with F(K, Theta).
    std::function<void(const StepEvent&)> observer;
};

struct RunResult {
    ModelParams params;
    TruncationState trunc;
    RunTrace trace;
    DistanceCounter seeding_evals;
    bool converged = false;
};

/// phi = sum_n min_c ||y(n) - mu_c||^2 over all C clusters. Adds N*C
/// data-to-cluster evaluations to `counter`, which should not be a training counter.
double quantization_error(const Dataset& data, const ModelParams& params, DistanceCounter& counter,
                          const Executor& exec = {});

/// Seeds, initializes and trains. After `initial_esteps` E-only iterations the
/// run alternates E- and M-steps until the relative change of the quantization
/// error stays below `tol` for three consecutive iterations or `max_iters` is hit.
RunResult run(const RunConfig& config, const Dataset& data, const RunOptions& options = {});

/// First record index at which the mean quantization error over
/// `variant_traces` is at or below the mean final error over `baseline_traces`.
/// Shorter traces hold their final value. std::nullopt if never reached.
std::optional<std::size_t> iterations_to_parity(const std::vector<RunTrace>& variant_traces,
                                                const std::vector<RunTrace>& baseline_traces);

struct SpeedupReport {
    /// C divided by the per-point search budget min(C, C'G + explore).
    double theoretical_min;
    /// Baseline over variant mean data-to-cluster evaluations per iteration.
    double measured;
};

/// Throws std::invalid_argument if either trace has no iterations.
SpeedupReport speedup_report(const RunTrace& variant, const RunTrace& baseline);

/// Mean data-to-cluster evaluations over records 1..T.
double mean_evals_per_iteration(const RunTrace& trace);

}  // namespace trunccluster
