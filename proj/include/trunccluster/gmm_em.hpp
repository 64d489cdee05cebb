// EM for the isotropic, equally weighted Gaussian mixture: full E-step,
// the M-step shared by all variants, the log-likelihood and the truncated
// free energy.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trunccluster/core.hpp"
#include "trunccluster/parallel.hpp"

namespace trunccluster {

/// Sparse per-point posterior weights. Point n owns entries
/// [offsets[n], offsets[n+1]); its support is exactly its truncation set.
struct Responsibilities {
    struct Entry {
        int cluster;
        double weight;
    };

    std::vector<std::size_t> offsets{0};
    std::vector<Entry> entries;

    std::size_t n_points() const { return offsets.size() - 1; }
    std::span<const Entry> point(std::size_t n) const {
        return {entries.data() + offsets[n], offsets[n + 1] - offsets[n]};
    }
};

/// Softmax of -d^2 / (2 sigma^2) over the given distances, shifted by the
/// smallest distance. Writes normalized weights into `weights`.
void softmax_weights(std::span<const double> distances, double sigma_sq, std::span<double> weights);

/// Log of sum_c exp(-d_c^2 / (2 sigma^2)) over the given distances.
double log_sum_exp_gauss(std::span<const double> distances, double sigma_sq);

/// Log-normalizer -log C - (D/2) log(2 pi sigma^2) of every joint p(c, y).
double log_joint_constant(std::size_t n_clusters, std::size_t dims, double sigma_sq);

/// Exact posteriors over all C clusters. Adds N*C data-to-cluster evaluations.
Responsibilities full_estep(const Dataset& data, const ModelParams& params, DistanceCounter& counter,
                            const Executor& exec = {});

/// Weighted mean and variance update. Clusters without mass keep their previous
/// mean; the new variance is floored at kVarianceFloor.
ModelParams mstep(const Dataset& data, const Responsibilities& resp, const ModelParams& params,
                  const Executor& exec = {});

/// Data log-likelihood under the mixture.
double log_likelihood(const Dataset& data, const ModelParams& params, DistanceCounter& counter,
                      const Executor& exec = {});

/// sum_n log sum_{c in K(n)} p(c, y(n)). Throws std::logic_error if any set is empty.
double truncated_free_energy(const Dataset& data, const SetTable& sets, const ModelParams& params,
                             DistanceCounter& counter, const Executor& exec = {});

/// Same quantity from distances already computed under `params`; row n of
/// `distances` holds d_c(n) for the members of K(n).
double truncated_free_energy_cached(std::span<const double> distances, std::size_t set_size,
                                    std::size_t n_clusters, std::size_t dims, double sigma_sq);

/// Initial variance: mean squared distance to the nearest mean, divided by D, floored.
double initial_sigma_sq(const Dataset& data, const Matrix& means, DistanceCounter& counter,
                        const Executor& exec = {});

}  // namespace trunccluster
