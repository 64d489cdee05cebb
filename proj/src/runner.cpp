#include "trunccluster/runner.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "trunccluster/gmm_em.hpp"
#include "trunccluster/rng.hpp"
#include "trunccluster/seeding.hpp"

namespace trunccluster {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 6> kNames{{
    {Algorithm::gmm_full, "gmm"},
    {Algorithm::kmeans_full, "kmeans"},
    {Algorithm::var_gmm_x, "var-gmm-x"},
    {Algorithm::var_gmm_s, "var-gmm-s"},
    {Algorithm::var_kmeans_x, "var-kmeans-x"},
    {Algorithm::var_kmeans_s, "var-kmeans-s"},
}};

// Substream ids derived from the run seed.
constexpr std::uint64_t kSeedingStream = 0;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kExploreStream = 2;
constexpr std::uint64_t kFillStream = 3;

std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t stream, std::size_t iteration) {
    return derive_seed(derive_seed(seed, stream), iteration);
}

SetTable all_clusters(std::size_t n_points, std::size_t n_clusters) {
    SetTable sets(n_points, n_clusters);
    for (std::size_t n = 0; n < n_points; ++n) {
        auto row = sets.row(n);
        for (std::size_t c = 0; c < n_clusters; ++c) row[c] = static_cast<int>(c);
    }
    return sets;
}

}  // namespace

std::string_view algorithm_name(Algorithm algorithm) {
    for (const auto& [alg, name] : kNames)
        if (alg == algorithm) return name;
    return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
    std::string canonical(name);
    std::replace(canonical.begin(), canonical.end(), '_', '-');
    if (canonical == "gmm-full") canonical = "gmm";
    if (canonical == "kmeans-full" || canonical == "lloyd") canonical = "kmeans";
    for (const auto& [alg, n] : kNames)
        if (n == canonical) return alg;
    return std::nullopt;
}

bool is_variational(Algorithm algorithm) {
    return algorithm != Algorithm::gmm_full && algorithm != Algorithm::kmeans_full;
}

bool is_kmeans_family(Algorithm algorithm) {
    return algorithm == Algorithm::kmeans_full || algorithm == Algorithm::var_kmeans_x ||
           algorithm == Algorithm::var_kmeans_s;
}

bool uses_estimated_neighbors(Algorithm algorithm) {
    return algorithm == Algorithm::var_gmm_s || algorithm == Algorithm::var_kmeans_s;
}

RunConfig resolve_config(RunConfig config, std::size_t n_points) {
    const std::size_t c = config.n_clusters;
    if (c == 0) throw std::invalid_argument("number of clusters must be at least 1");
    if (c > n_points)
        throw std::invalid_argument("number of clusters C=" + std::to_string(c) + " exceeds N=" +
                                    std::to_string(n_points));
    if (!(config.tol > 0.0)) throw std::invalid_argument("tol must be positive");

    const std::string name(algorithm_name(config.algorithm));
    switch (config.algorithm) {
        case Algorithm::gmm_full:
        case Algorithm::kmeans_full:
            config.c_prime = config.algorithm == Algorithm::gmm_full ? c : 1;
            config.g = c;
            config.explore = false;
            break;
        case Algorithm::var_gmm_x:
        case Algorithm::var_gmm_s:
            if (config.g < 1 || config.g > c)
                throw std::invalid_argument(name + " requires 1 <= G <= C (got G=" + std::to_string(config.g) +
                                            ", C=" + std::to_string(c) + ")");
            if (config.c_prime != 0 && config.c_prime != config.g)
                throw std::invalid_argument(name + " requires C' = G (variational GMM uses C' = G)");
            config.c_prime = config.g;
            break;
        case Algorithm::var_kmeans_x:
        case Algorithm::var_kmeans_s:
            if (config.c_prime != 0 && config.c_prime != 1)
                throw std::invalid_argument(name + " requires C' = 1 (variational k-means keeps C' = 1)");
            if (config.g <= 1 || config.g > c)
                throw std::invalid_argument(name + " requires 1 < G <= C (got G=" + std::to_string(config.g) +
                                            ", C=" + std::to_string(c) + ")");
            config.c_prime = 1;
            break;
    }
    return config;
}

double quantization_error(const Dataset& data, const ModelParams& params, DistanceCounter& counter,
                          const Executor& exec) {
    const std::size_t n_points = data.n_points();
    const std::size_t n_clusters = params.n_clusters();
    std::vector<double> partial(exec.chunk_count(n_points), 0.0);
    exec.for_chunks(n_points, [&](std::size_t begin, std::size_t end, std::size_t k) {
        double sum = 0.0;
        for (std::size_t n = begin; n < end; ++n) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < n_clusters; ++c)
                best = std::min(best, squared_distance(data.point(n), params.means.row(c)));
            sum += best;
        }
        partial[k] = sum;
    });
    counter.data_to_cluster += static_cast<std::uint64_t>(n_points) * n_clusters;
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

RunResult run(const RunConfig& raw_config, const Dataset& data, const RunOptions& options) {
    const RunConfig config = resolve_config(raw_config, data.n_points());
    const Executor& exec = options.exec;
    const std::size_t n_points = data.n_points();
    const std::size_t n_clusters = config.n_clusters;
    const Algorithm alg = config.algorithm;
    using Clock = std::chrono::steady_clock;

    RunResult result;
    result.trace = RunTrace{alg, n_points, n_clusters, config.c_prime, config.g, config.explore, {}};

    auto seeding = seed_means_dsq(data, n_clusters, derive_seed(config.seed, kSeedingStream), result.seeding_evals, exec);
    ModelParams params{std::move(seeding.means), 1.0};
    params.sigma_sq = initial_sigma_sq(data, params.means, result.seeding_evals, exec);

    TruncationState trunc;
    NeighborIndex nbrs;
    DistanceCounter metric;  // evaluation-only work, never reported as training cost
    if (is_variational(alg)) {
        auto init = init_truncation(n_points, n_clusters, config.c_prime, config.g,
                                    derive_seed(config.seed, kInitStream));
        trunc = std::move(init.first);
        nbrs = std::move(init.second);
    } else if (alg == Algorithm::kmeans_full) {
        trunc = full_truncation(data, params, 1, metric, exec);
    } else {
        trunc.sets = all_clusters(n_points, n_clusters);
    }

    auto free_energy_now = [&]() {
        if (alg == Algorithm::gmm_full) return log_likelihood(data, params, metric, exec);
        return truncated_free_energy(data, trunc.sets, params, metric, exec);
    };
    auto make_record = [&](std::size_t index, double free_energy, const DistanceCounter& train, double seconds) {
        IterationRecord rec;
        rec.index = index;
        rec.free_energy = free_energy;
        rec.quantization_error = quantization_error(data, params, metric, exec);
        if (config.with_loglik) rec.log_likelihood = log_likelihood(data, params, metric, exec);
        rec.data_to_cluster_evals = train.data_to_cluster;
        rec.cluster_to_cluster_evals = train.cluster_to_cluster;
        rec.wall_seconds = options.record_wall_time ? seconds : 0.0;
        return rec;
    };
    auto notify = [&](std::size_t iteration, StepEvent::Phase phase, double free_energy) {
        if (options.observer) options.observer(StepEvent{iteration, phase, free_energy, params, trunc});
    };

    result.trace.records.push_back(make_record(0, free_energy_now(), DistanceCounter{}, 0.0));

    std::size_t quiet_iterations = 0;
    for (std::size_t t = 1; t <= config.max_iters; ++t) {
        const auto started = Clock::now();
        const bool estep_only = t <= config.initial_esteps;
        DistanceCounter train;
        Responsibilities resp;
        double f_estep = 0.0;

        switch (alg) {
            case Algorithm::gmm_full:
                resp = full_estep(data, params, train, exec);
                break;
            case Algorithm::kmeans_full:
                trunc = full_truncation(data, params, 1, train, exec);
                break;
            case Algorithm::var_gmm_x:
            case Algorithm::var_kmeans_x: {
                nbrs = exhaustive_neighbors(params, config.g, train, exec);
                auto update = update_truncation(data, params, trunc, nbrs, config.explore,
                                                iteration_seed(config.seed, kExploreStream, t), train, exec);
                trunc = std::move(update.trunc);
                break;
            }
            case Algorithm::var_gmm_s:
            case Algorithm::var_kmeans_s: {
                auto update = update_truncation(data, params, trunc, nbrs, config.explore,
                                                iteration_seed(config.seed, kExploreStream, t), train, exec);
                trunc = std::move(update.trunc);
                auto estimate = estimate_neighbors(update.search, n_clusters, config.g, &nbrs,
                                                   iteration_seed(config.seed, kFillStream, t), exec);
                nbrs = std::move(estimate.nbrs);
                break;
            }
        }
        const double train_seconds = std::chrono::duration<double>(Clock::now() - started).count();

        if (alg == Algorithm::gmm_full) {
            f_estep = log_likelihood(data, params, metric, exec);
        } else {
            f_estep = truncated_free_energy_cached(trunc.distances, trunc.set_size(), n_clusters, data.dims(),
                                                   params.sigma_sq);
            resp = truncated_responsibilities(trunc, params.sigma_sq);
        }
        notify(t, StepEvent::Phase::estep, f_estep);

        const auto mstep_started = Clock::now();
        double f_now = f_estep;
        if (!estep_only) {
            params = mstep(data, resp, params, exec);
            f_now = free_energy_now();
            notify(t, StepEvent::Phase::mstep, f_now);
        }
        const double seconds =
            train_seconds + std::chrono::duration<double>(Clock::now() - mstep_started).count();

        result.trace.records.push_back(make_record(t, f_now, train, seconds));

        if (!estep_only) {
            const auto& recs = result.trace.records;
            const double prev = recs[recs.size() - 2].quantization_error;
            const double cur = recs.back().quantization_error;
            const double change = prev > 0.0 ? std::abs(cur - prev) / prev : std::abs(cur - prev);
            quiet_iterations = change < config.tol ? quiet_iterations + 1 : 0;
            if (quiet_iterations >= 3) {
                result.converged = true;
                break;
            }
        }
    }

    if (alg == Algorithm::gmm_full) trunc = full_truncation(data, params, n_clusters, metric, exec);
    result.params = std::move(params);
    result.trunc = std::move(trunc);
    return result;
}

std::optional<std::size_t> iterations_to_parity(const std::vector<RunTrace>& variant_traces,
                                                const std::vector<RunTrace>& baseline_traces) {
    if (variant_traces.empty() || baseline_traces.empty())
        throw std::invalid_argument("iterations_to_parity: need at least one variant and one baseline trace");
    double target = 0.0;
    for (const auto& trace : baseline_traces) {
        if (trace.records.empty()) throw std::invalid_argument("iterations_to_parity: empty baseline trace");
        target += trace.records.back().quantization_error;
    }
    target /= static_cast<double>(baseline_traces.size());

    std::size_t longest = 0;
    for (const auto& trace : variant_traces) {
        if (trace.records.empty()) throw std::invalid_argument("iterations_to_parity: empty variant trace");
        longest = std::max(longest, trace.records.size());
    }
    for (std::size_t t = 0; t < longest; ++t) {
        double mean = 0.0;
        for (const auto& trace : variant_traces)
            mean += trace.records[std::min(t, trace.records.size() - 1)].quantization_error;
        mean /= static_cast<double>(variant_traces.size());
        if (mean <= target) return t;
    }
    return std::nullopt;
}

double mean_evals_per_iteration(const RunTrace& trace) {
    if (trace.records.size() < 2) throw std::invalid_argument("trace has no iterations");
    double total = 0.0;
    for (std::size_t i = 1; i < trace.records.size(); ++i)
        total += static_cast<double>(trace.records[i].data_to_cluster_evals);
    return total / static_cast<double>(trace.records.size() - 1);
}

SpeedupReport speedup_report(const RunTrace& variant, const RunTrace& baseline) {
    const double c = static_cast<double>(variant.n_clusters);
    double budget = c;
    if (is_variational(variant.algorithm))
        budget = std::min(c, static_cast<double>(variant.c_prime * variant.g + (variant.explore ? 1 : 0)));
    return {c / budget, mean_evals_per_iteration(baseline) / mean_evals_per_iteration(variant)};
}

}  // namespace trunccluster
