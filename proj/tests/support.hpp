// Brute-force reference implementations and fixtures shared by the test suites.
// Nothing here calls into the library's numerical code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "trunccluster/core.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 3.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    Dense m(rows, std::vector<double>(cols));
    for (auto& r : m)
        for (auto& v : r) v = u(gen);
    return m;
}

inline trunccluster::Matrix to_matrix(const Dense& m) {
    trunccluster::Matrix out(m.size(), m.empty() ? 0 : m[0].size());
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < m[r].size(); ++c) out(r, c) = m[r][c];
    return out;
}

inline Dense to_dense(const trunccluster::Matrix& m) {
    Dense out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

inline long double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (long double)(a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

inline long double dist(const std::vector<double>& a, const std::vector<double>& b) {
    return std::sqrt(sq_dist(a, b));
}

// log p(c, y) for the isotropic equal-weight mixture.
inline long double log_joint(const std::vector<double>& y, const std::vector<double>& mu, double sigma_sq,
                             std::size_t n_clusters) {
    const long double pi = 3.141592653589793238462643383279502884L;
    return -std::log((long double)n_clusters) - 0.5L * y.size() * std::log(2 * pi * sigma_sq) -
           sq_dist(y, mu) / (2.0L * sigma_sq);
}

inline long double log_sum(const std::vector<long double>& terms) {
    long double m = *std::max_element(terms.begin(), terms.end());
    long double s = 0;
    for (auto t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

// Posterior over the clusters listed in `set` (all clusters if empty).
inline std::vector<double> posterior(const std::vector<double>& y, const Dense& means, double sigma_sq,
                                     std::vector<int> set = {}) {
    if (set.empty())
        for (std::size_t c = 0; c < means.size(); ++c) set.push_back(static_cast<int>(c));
    std::vector<long double> lj;
    for (int c : set) lj.push_back(log_joint(y, means[c], sigma_sq, means.size()));
    const long double z = log_sum(lj);
    std::vector<double> out(means.size(), 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) out[set[i]] = static_cast<double>(std::exp(lj[i] - z));
    return out;
}

inline long double log_likelihood(const Dense& data, const Dense& means, double sigma_sq) {
    long double total = 0;
    for (const auto& y : data) {
        std::vector<long double> lj;
        for (const auto& mu : means) lj.push_back(log_joint(y, mu, sigma_sq, means.size()));
        total += log_sum(lj);
    }
    return total;
}

inline long double free_energy(const Dense& data, const Dense& means, double sigma_sq,
                               const std::vector<std::vector<int>>& sets) {
    long double total = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        std::vector<long double> lj;
        for (int c : sets[n]) lj.push_back(log_joint(data[n], means[c], sigma_sq, means.size()));
        total += log_sum(lj);
    }
    return total;
}

struct MStep {
    Dense means;
    double sigma_sq;
};

// Dense responsibilities r[n][c].
inline MStep mstep(const Dense& data, const Dense& r, const Dense& old_means) {
    const std::size_t n_points = data.size(), dims = data[0].size(), n_clusters = old_means.size();
    MStep out{old_means, 0.0};
    for (std::size_t c = 0; c < n_clusters; ++c) {
        long double mass = 0;
        std::vector<long double> acc(dims, 0);
        for (std::size_t n = 0; n < n_points; ++n) {
            mass += r[n][c];
            for (std::size_t d = 0; d < dims; ++d) acc[d] += (long double)r[n][c] * data[n][d];
        }
        if (mass > 0)
            for (std::size_t d = 0; d < dims; ++d) out.means[c][d] = static_cast<double>(acc[d] / mass);
    }
    long double s = 0;
    for (std::size_t n = 0; n < n_points; ++n)
        for (std::size_t c = 0; c < n_clusters; ++c) s += r[n][c] * sq_dist(data[n], out.means[c]);
    out.sigma_sq = std::max(1e-8, static_cast<double>(s / (n_points * dims)));
    return out;
}

inline long double quantization_error(const Dense& data, const Dense& means) {
    long double total = 0;
    for (const auto& y : data) {
        long double best = INFINITY;
        for (const auto& mu : means) best = std::min(best, sq_dist(y, mu));
        total += best;
    }
    return total;
}

// Index of the nearest mean, first minimum wins.
inline int nearest(const std::vector<double>& y, const Dense& means) {
    int best = 0;
    long double bd = INFINITY;
    for (std::size_t c = 0; c < means.size(); ++c) {
        const long double d = sq_dist(y, means[c]);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

inline bool near_rel(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace oracle
