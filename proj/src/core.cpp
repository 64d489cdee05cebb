#include "trunccluster/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "trunccluster/rng.hpp"

namespace trunccluster {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
        throw std::invalid_argument("Matrix: value count " + std::to_string(values_.size()) +
                                    " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
}

Dataset::Dataset(Matrix points) : points_(std::move(points)) {
    if (points_.rows() == 0 || points_.cols() == 0) throw std::invalid_argument("Dataset: need N >= 1 and D >= 1");
    for (double v : points_.values())
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite value");
}

double euclidean_distance(std::span<const double> a, std::span<const double> b, DistanceCounter& counter,
                          DistanceKind kind) {
    if (a.size() != b.size())
        throw std::invalid_argument("euclidean_distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    if (kind == DistanceKind::data_cluster)
        ++counter.data_to_cluster;
    else
        ++counter.cluster_to_cluster;
    return std::sqrt(squared_distance(a, b));
}

void partition_k_smallest(std::span<KeyedDistance> values, std::size_t k) {
    if (k == 0 || k >= values.size()) return;
    // libstdc++ nth_element is introselect with deterministic pivots.
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end(),
                     distance_then_key);
}

std::vector<int> select_k_smallest(std::vector<KeyedDistance> values, std::size_t k) {
    partition_k_smallest(values, k);
    const std::size_t take = std::min(k, values.size());
    std::vector<int> keys;
    keys.reserve(take);
    for (std::size_t i = 0; i < take; ++i) keys.push_back(values[i].key);
    std::sort(keys.begin(), keys.end());
    return keys;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

}  // namespace trunccluster
