#include "trunccluster/seeding.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "trunccluster/rng.hpp"

namespace trunccluster {

Seeding seed_means_dsq(const Dataset& data, std::size_t n_clusters, std::uint64_t seed, DistanceCounter& counter,
                       const Executor& exec) {
    const std::size_t n_points = data.n_points();
    if (n_clusters == 0 || n_clusters > n_points)
        throw std::invalid_argument("seed_means_dsq: need 1 <= C <= N (C=" + std::to_string(n_clusters) +
                                    ", N=" + std::to_string(n_points) + ")");
    Rng rng(seed);
    Seeding out{Matrix(n_clusters, data.dims()), {}};
    out.indices.reserve(n_clusters);
    std::vector<char> chosen(n_points, 0);
    std::vector<double> weight(n_points, 0.0);

    auto take = [&](std::size_t idx) {
        chosen[idx] = 1;
        const auto row = data.point(idx);
        std::copy(row.begin(), row.end(), out.means.row(out.indices.size()).begin());
        out.indices.push_back(idx);
    };

    take(rng.index(n_points));
    std::vector<DistanceCounter> counters(exec.chunk_count(n_points));
    while (out.indices.size() < n_clusters) {
        const auto last = out.means.row(out.indices.size() - 1);
        const bool first_refresh = out.indices.size() == 1;
        exec.for_chunks(n_points, [&](std::size_t begin, std::size_t end, std::size_t k) {
            for (std::size_t n = begin; n < end; ++n) {
                const double d = euclidean_distance(data.point(n), last, counters[k], DistanceKind::data_cluster);
                weight[n] = first_refresh ? d * d : std::min(weight[n], d * d);
            }
        });

        double total = 0.0;
        for (std::size_t n = 0; n < n_points; ++n)
            if (!chosen[n]) total += weight[n];

        std::size_t pick = n_points;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double running = 0.0;
            for (std::size_t n = 0; n < n_points; ++n) {
                if (chosen[n] || weight[n] <= 0.0) continue;
                running += weight[n];
                pick = n;
                if (running > target) break;
            }
        } else {
            auto k = rng.index(n_points - out.indices.size());
            for (std::size_t n = 0; n < n_points; ++n) {
                if (chosen[n]) continue;
                if (k-- == 0) {
                    pick = n;
                    break;
                }
            }
        }
        take(pick);
    }
    for (const auto& c : counters) counter += c;
    return out;
}

}  // namespace trunccluster
