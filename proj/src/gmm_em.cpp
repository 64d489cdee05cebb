#include "trunccluster/gmm_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trunccluster {

namespace {

// Sums per-chunk partials in chunk order so the total does not depend on threading.
template <typename Fn>
double chunked_sum(std::size_t n, const Executor& exec, DistanceCounter& counter, Fn&& per_point) {
    const std::size_t chunks = exec.chunk_count(n);
    std::vector<double> partial(chunks, 0.0);
    std::vector<DistanceCounter> counters(chunks);
    exec.for_chunks(n, [&](std::size_t begin, std::size_t end, std::size_t k) {
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += per_point(i, counters[k]);
        partial[k] = sum;
    });
    double total = 0.0;
    for (std::size_t k = 0; k < chunks; ++k) {
        total += partial[k];
        counter += counters[k];
    }
    return total;
}

}  // namespace

void softmax_weights(std::span<const double> distances, double sigma_sq, std::span<double> weights) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (double d : distances) min_sq = std::min(min_sq, d * d);
    const double scale = -0.5 / sigma_sq;
    double total = 0.0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        weights[i] = std::exp(scale * (distances[i] * distances[i] - min_sq));
        total += weights[i];
    }
    for (std::size_t i = 0; i < distances.size(); ++i) weights[i] /= total;
}

double log_sum_exp_gauss(std::span<const double> distances, double sigma_sq) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (double d : distances) min_sq = std::min(min_sq, d * d);
    const double scale = -0.5 / sigma_sq;
    double total = 0.0;
    for (double d : distances) total += std::exp(scale * (d * d - min_sq));
    return scale * min_sq + std::log(total);
}

double log_joint_constant(std::size_t n_clusters, std::size_t dims, double sigma_sq) {
    return -std::log(static_cast<double>(n_clusters)) -
           0.5 * static_cast<double>(dims) * std::log(2.0 * std::numbers::pi * sigma_sq);
}

Responsibilities full_estep(const Dataset& data, const ModelParams& params, DistanceCounter& counter,
                            const Executor& exec) {
    const std::size_t n_points = data.n_points();
    const std::size_t n_clusters = params.n_clusters();
    Responsibilities resp;
    resp.offsets.resize(n_points + 1);
    for (std::size_t n = 0; n <= n_points; ++n) resp.offsets[n] = n * n_clusters;
    resp.entries.resize(n_points * n_clusters);

    std::vector<DistanceCounter> counters(exec.chunk_count(n_points));
    exec.for_chunks(n_points, [&](std::size_t begin, std::size_t end, std::size_t k) {
        std::vector<double> dist(n_clusters), weight(n_clusters);
        for (std::size_t n = begin; n < end; ++n) {
            for (std::size_t c = 0; c < n_clusters; ++c)
                dist[c] = euclidean_distance(data.point(n), params.means.row(c), counters[k],
                                             DistanceKind::data_cluster);
            softmax_weights(dist, params.sigma_sq, weight);
            auto* out = resp.entries.data() + n * n_clusters;
            for (std::size_t c = 0; c < n_clusters; ++c) out[c] = {static_cast<int>(c), weight[c]};
        }
    });
    for (const auto& c : counters) counter += c;
    return resp;
}

ModelParams mstep(const Dataset& data, const Responsibilities& resp, const ModelParams& params,
                  const Executor& exec) {
    const std::size_t n_points = data.n_points();
    const std::size_t n_clusters = params.n_clusters();
    const std::size_t dims = data.dims();
    if (resp.n_points() != n_points) throw std::invalid_argument("mstep: responsibilities do not match data");

    // Transpose to per-cluster member lists, ascending in n.
    struct Member {
        std::size_t point;
        double weight;
    };
    std::vector<std::size_t> start(n_clusters + 1, 0);
    for (const auto& e : resp.entries) ++start[static_cast<std::size_t>(e.cluster) + 1];
    for (std::size_t c = 0; c < n_clusters; ++c) start[c + 1] += start[c];
    std::vector<Member> members(resp.entries.size());
    {
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t n = 0; n < n_points; ++n)
            for (const auto& e : resp.point(n)) members[fill[static_cast<std::size_t>(e.cluster)]++] = {n, e.weight};
    }

    ModelParams next = params;
    std::vector<double> residual(n_clusters, 0.0);
    exec.for_chunks(n_clusters, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<double> acc(dims);
        for (std::size_t c = begin; c < end; ++c) {
            double mass = 0.0;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = start[c]; i < start[c + 1]; ++i) {
                const auto y = data.point(members[i].point);
                mass += members[i].weight;
                for (std::size_t d = 0; d < dims; ++d) acc[d] += members[i].weight * y[d];
            }
            auto mean = next.means.row(c);
            if (mass > 0.0)
                for (std::size_t d = 0; d < dims; ++d) mean[d] = acc[d] / mass;
            double sq = 0.0;
            for (std::size_t i = start[c]; i < start[c + 1]; ++i)
                sq += members[i].weight * squared_distance(data.point(members[i].point), mean);
            residual[c] = sq;
        }
    });
    double total = 0.0;
    for (double r : residual) total += r;
    next.sigma_sq = std::max(kVarianceFloor, total / (static_cast<double>(dims) * static_cast<double>(n_points)));
    return next;
}

double log_likelihood(const Dataset& data, const ModelParams& params, DistanceCounter& counter,
                      const Executor& exec) {
    const std::size_t n_clusters = params.n_clusters();
    const double sum = chunked_sum(data.n_points(), exec, counter, [&](std::size_t n, DistanceCounter& local) {
        thread_local std::vector<double> dist;
        dist.resize(n_clusters);
        for (std::size_t c = 0; c < n_clusters; ++c)
            dist[c] = euclidean_distance(data.point(n), params.means.row(c), local, DistanceKind::data_cluster);
        return log_sum_exp_gauss(dist, params.sigma_sq);
    });
    return sum + static_cast<double>(data.n_points()) * log_joint_constant(n_clusters, data.dims(), params.sigma_sq);
}

double truncated_free_energy(const Dataset& data, const SetTable& sets, const ModelParams& params,
                             DistanceCounter& counter, const Executor& exec) {
    if (sets.rows() != data.n_points()) throw std::invalid_argument("truncated_free_energy: set count mismatch");
    if (sets.width() == 0) throw std::logic_error("truncated_free_energy: empty truncation set");
    const double sum = chunked_sum(data.n_points(), exec, counter, [&](std::size_t n, DistanceCounter& local) {
        thread_local std::vector<double> dist;
        const auto ids = sets.row(n);
        dist.resize(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= params.n_clusters())
                throw std::invalid_argument("truncated_free_energy: cluster id out of range");
            dist[i] = euclidean_distance(data.point(n), params.means.row(static_cast<std::size_t>(ids[i])), local,
                                         DistanceKind::data_cluster);
        }
        return log_sum_exp_gauss(dist, params.sigma_sq);
    });
    return sum + static_cast<double>(data.n_points()) *
                     log_joint_constant(params.n_clusters(), data.dims(), params.sigma_sq);
}

double truncated_free_energy_cached(std::span<const double> distances, std::size_t set_size,
                                    std::size_t n_clusters, std::size_t dims, double sigma_sq) {
    if (set_size == 0) throw std::logic_error("truncated_free_energy: empty truncation set");
    const std::size_t n_points = distances.size() / set_size;
    double sum = 0.0;
    for (std::size_t n = 0; n < n_points; ++n)
        sum += log_sum_exp_gauss(distances.subspan(n * set_size, set_size), sigma_sq);
    return sum + static_cast<double>(n_points) * log_joint_constant(n_clusters, dims, sigma_sq);
}

double initial_sigma_sq(const Dataset& data, const Matrix& means, DistanceCounter& counter, const Executor& exec) {
    const double sum = chunked_sum(data.n_points(), exec, counter, [&](std::size_t n, DistanceCounter& local) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < means.rows(); ++c) {
            const double d = euclidean_distance(data.point(n), means.row(c), local, DistanceKind::data_cluster);
            best = std::min(best, d * d);
        }
        return best;
    });
    return std::max(kVarianceFloor, sum / static_cast<double>(data.n_points()) / static_cast<double>(data.dims()));
}

}  // namespace trunccluster
