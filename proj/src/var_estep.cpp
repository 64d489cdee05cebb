#include "trunccluster/var_estep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "trunccluster/rng.hpp"

namespace trunccluster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Floyd's algorithm: k distinct values from [0, n).
template <typename Draw>
void sample_distinct(std::size_t n, std::size_t k, Draw&& draw, std::span<int> out) {
    std::size_t filled = 0;
    for (std::size_t j = n - k; j < n; ++j) {
        const int t = static_cast<int>(draw(j + 1));
        const bool seen = std::find(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(filled), t) !=
                          out.begin() + static_cast<std::ptrdiff_t>(filled);
        out[filled++] = seen ? static_cast<int>(j) : t;
    }
}

// Uniform cluster outside the stamped set; `used` of the C clusters are stamped.
int draw_outside(SplitMix& gen, std::size_t n_clusters, std::size_t used, const std::vector<std::size_t>& stamp,
                 std::size_t mark) {
    if (used * 2 <= n_clusters) {
        for (;;) {
            const auto c = gen.index(n_clusters);
            if (stamp[c] != mark) return static_cast<int>(c);
        }
    }
    auto pick = gen.index(n_clusters - used);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        if (stamp[c] == mark) continue;
        if (pick-- == 0) return static_cast<int>(c);
    }
    throw std::logic_error("draw_outside: no free cluster");
}

}  // namespace

std::pair<TruncationState, NeighborIndex> init_truncation(std::size_t n_points, std::size_t n_clusters,
                                                          std::size_t c_prime, std::size_t g,
                                                          std::uint64_t seed) {
    if (!(1 <= c_prime && c_prime <= g && g <= n_clusters))
        throw std::invalid_argument("init_truncation: need 1 <= C' <= G <= C (got C'=" + std::to_string(c_prime) +
                                    ", G=" + std::to_string(g) + ", C=" + std::to_string(n_clusters) + ")");
    Rng rng(seed);
    auto draw = [&](std::size_t bound) { return rng.index(bound); };

    TruncationState trunc{SetTable(n_points, c_prime), {}};
    for (std::size_t n = 0; n < n_points; ++n) {
        auto row = trunc.sets.row(n);
        sample_distinct(n_clusters, c_prime, draw, row);
        std::sort(row.begin(), row.end());
    }

    NeighborIndex nbrs{SetTable(n_clusters, g), NeighborIndex::Provenance::random};
    for (std::size_t c = 0; c < n_clusters; ++c) {
        auto row = nbrs.sets.row(c);
        row[0] = static_cast<int>(c);
        // Others are drawn from [0, C-1) and shifted past c.
        sample_distinct(n_clusters - 1, g - 1, draw, row.subspan(1));
        for (auto& id : row.subspan(1))
            if (id >= static_cast<int>(c)) ++id;
        std::sort(row.begin(), row.end());
    }
    return {std::move(trunc), std::move(nbrs)};
}

NeighborIndex exhaustive_neighbors(const ModelParams& params, std::size_t g, DistanceCounter& counter,
                                   const Executor& exec) {
    const std::size_t n_clusters = params.n_clusters();
    if (g == 0 || g > n_clusters) throw std::invalid_argument("exhaustive_neighbors: need 1 <= G <= C");
    NeighborIndex nbrs{SetTable(n_clusters, g), NeighborIndex::Provenance::exhaustive};

    Executor cluster_exec = exec;
    cluster_exec.chunk_size = 64;
    std::vector<DistanceCounter> counters(cluster_exec.chunk_count(n_clusters));
    cluster_exec.for_chunks(n_clusters, [&](std::size_t begin, std::size_t end, std::size_t k) {
        std::vector<KeyedDistance> row(n_clusters);
        for (std::size_t c = begin; c < end; ++c) {
            for (std::size_t other = 0; other < n_clusters; ++other) {
                const double d = euclidean_distance(params.means.row(other), params.means.row(c), counters[k],
                                                    DistanceKind::cluster_cluster);
                // c itself is always kept, even if another mean coincides with it.
                row[other] = {static_cast<int>(other), other == c ? -kInf : d};
            }
            partition_k_smallest(row, g);
            auto out = nbrs.sets.row(c);
            for (std::size_t i = 0; i < g; ++i) out[i] = row[i].key;
            std::sort(out.begin(), out.end());
        }
    });
    for (const auto& c : counters) counter += c;
    return nbrs;
}

TruncationUpdate update_truncation(const Dataset& data, const ModelParams& params, const TruncationState& trunc,
                                   const NeighborIndex& nbrs, bool explore, std::uint64_t explore_seed,
                                   DistanceCounter& counter, const Executor& exec) {
    const std::size_t n_points = data.n_points();
    const std::size_t n_clusters = params.n_clusters();
    const std::size_t c_prime = trunc.set_size();
    const std::size_t g = nbrs.sets.width();
    if (trunc.n_points() != n_points || nbrs.n_clusters() != n_clusters)
        throw std::invalid_argument("update_truncation: state does not match data/params");

    const std::size_t slot = std::min(c_prime * g + (explore ? 1 : 0), n_clusters);
    std::vector<int> padded_ids(n_points * slot);
    std::vector<double> padded_dist(n_points * slot);
    std::vector<std::size_t> sizes(n_points);

    TruncationUpdate out;
    out.trunc.sets = SetTable(n_points, c_prime);
    out.trunc.distances.resize(n_points * c_prime);
    out.search.exploratory.assign(n_points, -1);

    std::vector<DistanceCounter> counters(exec.chunk_count(n_points));
    exec.for_chunks(n_points, [&](std::size_t begin, std::size_t end, std::size_t k) {
        std::vector<std::size_t> stamp(n_clusters, 0);
        std::vector<KeyedDistance> cand;
        cand.reserve(slot);
        for (std::size_t n = begin; n < end; ++n) {
            const std::size_t mark = n + 1;
            int* ids = padded_ids.data() + n * slot;
            std::size_t size = 0;
            for (int member : trunc.sets.row(n)) {
                for (int c : nbrs.sets.row(static_cast<std::size_t>(member))) {
                    if (stamp[static_cast<std::size_t>(c)] == mark) continue;
                    stamp[static_cast<std::size_t>(c)] = mark;
                    ids[size++] = c;
                }
            }
            for (int member : trunc.sets.row(n))
                if (stamp[static_cast<std::size_t>(member)] != mark)
                    throw std::logic_error("update_truncation: K(n) not contained in G(n) for n=" +
                                           std::to_string(n));
            if (explore && size < n_clusters) {
                SplitMix gen(derive_seed(explore_seed, n));
                const int extra = draw_outside(gen, n_clusters, size, stamp, mark);
                ids[size++] = extra;
                out.search.exploratory[n] = extra;
            }
            sizes[n] = size;

            double* dist = padded_dist.data() + n * slot;
            cand.clear();
            for (std::size_t i = 0; i < size; ++i) {
                dist[i] = euclidean_distance(data.point(n), params.means.row(static_cast<std::size_t>(ids[i])),
                                             counters[k], DistanceKind::data_cluster);
                cand.push_back({ids[i], dist[i]});
            }
            partition_k_smallest(cand, c_prime);
            std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(c_prime),
                      [](const KeyedDistance& a, const KeyedDistance& b) { return a.key < b.key; });
            auto row = out.trunc.sets.row(n);
            for (std::size_t i = 0; i < c_prime; ++i) {
                row[i] = cand[i].key;
                out.trunc.distances[n * c_prime + i] = cand[i].distance;
            }
        }
    });
    for (const auto& c : counters) counter += c;

    auto& search = out.search;
    search.offsets.resize(n_points + 1);
    for (std::size_t n = 0; n < n_points; ++n) search.offsets[n + 1] = search.offsets[n] + sizes[n];
    search.ids.resize(search.offsets.back());
    search.distances.resize(search.offsets.back());
    for (std::size_t n = 0; n < n_points; ++n) {
        std::copy_n(padded_ids.data() + n * slot, sizes[n], search.ids.data() + search.offsets[n]);
        std::copy_n(padded_dist.data() + n * slot, sizes[n], search.distances.data() + search.offsets[n]);
    }
    return out;
}

NeighborEstimate estimate_neighbors(const SearchSpace& search, std::size_t n_clusters, std::size_t g,
                                    const NeighborIndex* previous, std::uint64_t fill_seed, const Executor& exec) {
    if (g == 0 || g > n_clusters) throw std::invalid_argument("estimate_neighbors: need 1 <= G <= C");
    if (previous && (previous->n_clusters() != n_clusters || previous->sets.width() != g))
        throw std::invalid_argument("estimate_neighbors: previous index has the wrong shape");
    const std::size_t n_points = search.n_points();

    NeighborEstimate out;
    auto& assign = out.assign;

    // c_o(n) and the partition I_c.
    assign.nearest.resize(n_points);
    exec.for_chunks(n_points, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t n = begin; n < end; ++n) {
            const auto ids = search.point_ids(n);
            const auto dist = search.point_distances(n);
            if (ids.empty()) throw std::logic_error("estimate_neighbors: empty search space");
            KeyedDistance best{ids[0], dist[0]};
            for (std::size_t i = 1; i < ids.size(); ++i)
                if (distance_then_key({ids[i], dist[i]}, best)) best = {ids[i], dist[i]};
            assign.nearest[n] = best.key;
        }
    });
    assign.member_offsets.assign(n_clusters + 1, 0);
    for (int c : assign.nearest) ++assign.member_offsets[static_cast<std::size_t>(c) + 1];
    for (std::size_t c = 0; c < n_clusters; ++c) assign.member_offsets[c + 1] += assign.member_offsets[c];
    assign.members.resize(n_points);
    {
        std::vector<std::size_t> fill(assign.member_offsets.begin(), assign.member_offsets.end() - 1);
        for (std::size_t n = 0; n < n_points; ++n) assign.members[fill[static_cast<std::size_t>(assign.nearest[n])]++] = n;
    }

    // Accumulate d(c, c~) sums and counts per observed pair, one cluster at a time.
    std::vector<std::vector<AssignmentIndex::PairStat>> per_cluster(n_clusters);
    std::vector<std::size_t> selected(n_clusters, 0);
    out.nbrs = NeighborIndex{SetTable(n_clusters, g), NeighborIndex::Provenance::estimated};

    Executor cluster_exec = exec;
    cluster_exec.chunk_size = 64;
    cluster_exec.for_chunks(n_clusters, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<double> sum(n_clusters, 0.0);
        std::vector<std::uint32_t> count(n_clusters, 0);
        std::vector<int> touched;
        std::vector<KeyedDistance> cand;
        for (std::size_t c = begin; c < end; ++c) {
            touched.clear();
            for (std::size_t n : assign.members_of(c)) {
                const auto ids = search.point_ids(n);
                const auto dist = search.point_distances(n);
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    const auto other = static_cast<std::size_t>(ids[i]);
                    if (count[other]++ == 0) touched.push_back(ids[i]);
                    sum[other] += dist[i];
                }
            }
            std::sort(touched.begin(), touched.end());

            auto& stats = per_cluster[c];
            stats.reserve(touched.size());
            cand.clear();
            cand.push_back({static_cast<int>(c), -kInf});
            for (int other : touched) {
                const auto o = static_cast<std::size_t>(other);
                stats.push_back({other, sum[o], count[o]});
                if (o != c) cand.push_back({other, sum[o] / count[o]});
                sum[o] = 0.0;
                count[o] = 0;
            }

            partition_k_smallest(cand, g);
            const std::size_t take = std::min(g, cand.size());
            auto row = out.nbrs.sets.row(c);
            for (std::size_t i = 0; i < take; ++i) row[i] = cand[i].key;
            std::size_t filled = take;
            if (filled < g && previous) {
                for (int prev : previous->sets.row(c)) {
                    if (filled == g) break;
                    if (std::find(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(filled), prev) ==
                        row.begin() + static_cast<std::ptrdiff_t>(filled))
                        row[filled++] = prev;
                }
            }
            selected[c] = filled;
        }
    });

    for (std::size_t c = 0; c < n_clusters; ++c) {
        auto row = out.nbrs.sets.row(c);
        if (selected[c] < g) {
            SplitMix gen(derive_seed(fill_seed, c));
            std::size_t filled = selected[c];
            while (filled < g) {
                const int cand = static_cast<int>(gen.index(n_clusters));
                if (std::find(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(filled), cand) ==
                    row.begin() + static_cast<std::ptrdiff_t>(filled))
                    row[filled++] = cand;
            }
        }
        std::sort(row.begin(), row.end());
    }

    assign.pair_offsets.assign(n_clusters + 1, 0);
    for (std::size_t c = 0; c < n_clusters; ++c)
        assign.pair_offsets[c + 1] = assign.pair_offsets[c] + per_cluster[c].size();
    assign.pairs.reserve(assign.pair_offsets.back());
    for (auto& stats : per_cluster) assign.pairs.insert(assign.pairs.end(), stats.begin(), stats.end());
    return out;
}

Responsibilities truncated_responsibilities(const TruncationState& trunc, double sigma_sq) {
    if (!trunc.has_distances()) throw std::logic_error("truncated_responsibilities: no cached distances");
    const std::size_t n_points = trunc.n_points();
    const std::size_t width = trunc.set_size();
    Responsibilities resp;
    resp.offsets.resize(n_points + 1);
    for (std::size_t n = 0; n <= n_points; ++n) resp.offsets[n] = n * width;
    resp.entries.resize(n_points * width);
    std::vector<double> weight(width);
    for (std::size_t n = 0; n < n_points; ++n) {
        softmax_weights(trunc.point_distances(n), sigma_sq, weight);
        const auto ids = trunc.sets.row(n);
        for (std::size_t i = 0; i < width; ++i) resp.entries[n * width + i] = {ids[i], weight[i]};
    }
    return resp;
}

TruncationState full_truncation(const Dataset& data, const ModelParams& params, std::size_t c_prime,
                                DistanceCounter& counter, const Executor& exec) {
    const std::size_t n_points = data.n_points();
    const std::size_t n_clusters = params.n_clusters();
    if (c_prime == 0 || c_prime > n_clusters) throw std::invalid_argument("full_truncation: need 1 <= C' <= C");
    TruncationState trunc{SetTable(n_points, c_prime), std::vector<double>(n_points * c_prime)};
    std::vector<DistanceCounter> counters(exec.chunk_count(n_points));
    exec.for_chunks(n_points, [&](std::size_t begin, std::size_t end, std::size_t k) {
        std::vector<KeyedDistance> cand(n_clusters);
        for (std::size_t n = begin; n < end; ++n) {
            for (std::size_t c = 0; c < n_clusters; ++c)
                cand[c] = {static_cast<int>(c), euclidean_distance(data.point(n), params.means.row(c), counters[k],
                                                                   DistanceKind::data_cluster)};
            if (c_prime == 1) {
                // Linear argmin, first minimum wins.
                std::size_t best = 0;
                for (std::size_t c = 1; c < n_clusters; ++c)
                    if (cand[c].distance < cand[best].distance) best = c;
                std::swap(cand[0], cand[best]);
            } else {
                partition_k_smallest(cand, c_prime);
                std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(c_prime),
                          [](const KeyedDistance& a, const KeyedDistance& b) { return a.key < b.key; });
            }
            auto row = trunc.sets.row(n);
            for (std::size_t i = 0; i < c_prime; ++i) {
                row[i] = cand[i].key;
                trunc.distances[n * c_prime + i] = cand[i].distance;
            }
        }
    });
    for (const auto& c : counters) counter += c;
    return trunc;
}

}  // namespace trunccluster
