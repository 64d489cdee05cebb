#pragma once

#include <cstdint>
#include <vector>

#include "trunccluster/core.hpp"
#include "trunccluster/parallel.hpp"

namespace trunccluster {

struct Seeding {
    Matrix means;
    /// Row indices of the chosen points, in draw order.
    std::vector<std::size_t> indices;
};

/// D^2-weighted seeding: the first mean is a uniform data point, each further
/// one is drawn with probability proportional to its squared distance to the
/// nearest mean chosen so far. If every remaining weight is zero the draw falls
/// back to a uniform pick among unchosen points, so the C indices are distinct.
/// Throws std::invalid_argument if C is zero or exceeds N.
Seeding seed_means_dsq(const Dataset& data, std::size_t n_clusters, std::uint64_t seed, DistanceCounter& counter,
                       const Executor& exec = {});

}  // namespace trunccluster
