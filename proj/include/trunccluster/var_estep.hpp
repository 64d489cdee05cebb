// Partial truncated E-steps.
//
// Every point n keeps a truncation set K(n) of C' clusters. One partial E-step
// evaluates the distances from y(n) only to the clusters in its search space
// G(n), the union of the neighborhoods G_c of its current members, and keeps
// the C' closest. Because K(n) is contained in G(n), the kept distances can
// only shrink and the truncated free energy can only grow.
//
// Neighborhoods G_c come either from all C^2 cluster-to-cluster distances
// (exhaustive) or from an estimate built from the data-to-cluster distances
// that the partial E-step has already computed (estimated), which costs no
// additional kernel calls.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "trunccluster/core.hpp"
#include "trunccluster/gmm_em.hpp"
#include "trunccluster/parallel.hpp"

namespace trunccluster {

/// Per-point truncation sets K(n), each sorted ascending, with the distances
/// d_c(n) of their members under the parameters of the last update.
struct TruncationState {
    SetTable sets;
    /// Row-major N x C'; empty until the first update.
    std::vector<double> distances;

    std::size_t n_points() const { return sets.rows(); }
    std::size_t set_size() const { return sets.width(); }
    bool has_distances() const { return distances.size() == sets.rows() * sets.width(); }
    std::span<const double> point_distances(std::size_t n) const {
        return {distances.data() + n * sets.width(), sets.width()};
    }
};

/// Per-cluster neighborhoods G_c of size min(G, C); row c always contains c.
struct NeighborIndex {
    enum class Provenance { random, exhaustive, estimated };

    SetTable sets;
    Provenance provenance = Provenance::random;

    std::size_t n_clusters() const { return sets.rows(); }
};

/// Per-point search spaces G(n) with their data-to-cluster distances.
struct SearchSpace {
    std::vector<std::size_t> offsets{0};
    std::vector<int> ids;
    std::vector<double> distances;
    /// Exploratory cluster added to G(n), or -1.
    std::vector<int> exploratory;

    std::size_t n_points() const { return offsets.size() - 1; }
    std::span<const int> point_ids(std::size_t n) const {
        return {ids.data() + offsets[n], offsets[n + 1] - offsets[n]};
    }
    std::span<const double> point_distances(std::size_t n) const {
        return {distances.data() + offsets[n], offsets[n + 1] - offsets[n]};
    }
};

/// Nearest-cluster partition I_c and the sparse statistics behind the
/// cluster-to-cluster distance estimates.
struct AssignmentIndex {
    struct PairStat {
        int other;
        double distance_sum;
        std::uint32_t count;
        double estimate() const { return distance_sum / count; }
    };

    /// c_o(n): argmin over G(n), ties to the smaller id.
    std::vector<int> nearest;
    std::vector<std::size_t> member_offsets{0};
    std::vector<std::size_t> members;
    std::vector<std::size_t> pair_offsets{0};
    std::vector<PairStat> pairs;

    std::size_t n_clusters() const { return member_offsets.size() - 1; }
    std::span<const std::size_t> members_of(std::size_t c) const {
        return {members.data() + member_offsets[c], member_offsets[c + 1] - member_offsets[c]};
    }
    /// Observed pairs (c, c~), sorted by c~.
    std::span<const PairStat> pairs_of(std::size_t c) const {
        return {pairs.data() + pair_offsets[c], pair_offsets[c + 1] - pair_offsets[c]};
    }
};

/// Random initial state: every K(n) holds C' distinct uniform clusters and
/// every G_c holds c plus G-1 distinct uniform others. Requires
/// 1 <= C' <= G <= C, otherwise throws std::invalid_argument.
std::pair<TruncationState, NeighborIndex> init_truncation(std::size_t n_points, std::size_t n_clusters,
                                                          std::size_t c_prime, std::size_t g,
                                                          std::uint64_t seed);

/// All C^2 cluster distances; G_c is the G nearest clusters of c with c forced in.
NeighborIndex exhaustive_neighbors(const ModelParams& params, std::size_t g, DistanceCounter& counter,
                                   const Executor& exec = {});

struct TruncationUpdate {
    TruncationState trunc;
    SearchSpace search;
};

/// One partial E-step over all points. With `explore`, each G(n) also gets one
/// cluster drawn uniformly from outside it, seeded per point from `explore_seed`.
/// Throws std::logic_error if some K(n) is not contained in its G(n).
TruncationUpdate update_truncation(const Dataset& data, const ModelParams& params, const TruncationState& trunc,
                                   const NeighborIndex& nbrs, bool explore, std::uint64_t explore_seed,
                                   DistanceCounter& counter, const Executor& exec = {});

struct NeighborEstimate {
    NeighborIndex nbrs;
    AssignmentIndex assign;
};

/// Estimated neighborhoods from the distances stored in `search`.
///
/// For each c the estimate of d(c, c~) is the mean of d_c~(n) over the points n
/// whose nearest evaluated cluster is c and whose search space contains c~.
/// Pairs never observed are treated as infinitely far. If fewer than G
/// candidates are finite, G_c is completed from `previous` (when given) and
/// then with distinct uniform clusters drawn from `fill_seed`.
NeighborEstimate estimate_neighbors(const SearchSpace& search, std::size_t n_clusters, std::size_t g,
                                    const NeighborIndex* previous, std::uint64_t fill_seed,
                                    const Executor& exec = {});

/// Softmax over the cached distances of each K(n).
Responsibilities truncated_responsibilities(const TruncationState& trunc, double sigma_sq);

/// K(n) = the C' nearest of all C clusters (C' = 1 gives Lloyd's assignment step).
/// Adds N*C data-to-cluster evaluations.
TruncationState full_truncation(const Dataset& data, const ModelParams& params, std::size_t c_prime,
                                DistanceCounter& counter, const Executor& exec = {});

}  // namespace trunccluster
