// Fundamental types shared by every clustering variant: datasets, model
// parameters, counted distance kernels and unordered partial selection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace trunccluster {

/// Lower bound applied to the shared isotropic variance after every update.
inline constexpr double kVarianceFloor = 1e-8;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// N points in D dimensions. Validated on construction and never mutated.
class Dataset {
public:
    /// Throws std::invalid_argument for an empty matrix or a non-finite entry.
    explicit Dataset(Matrix points);

    std::size_t n_points() const { return points_.rows(); }
    std::size_t dims() const { return points_.cols(); }
    std::span<const double> point(std::size_t n) const { return points_.row(n); }
    const Matrix& points() const { return points_; }

private:
    Matrix points_;
};

/// C isotropic Gaussian means with one shared variance.
struct ModelParams {
    Matrix means;
    double sigma_sq = 1.0;

    std::size_t n_clusters() const { return means.rows(); }
    std::size_t dims() const { return means.cols(); }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class DistanceKind { data_cluster, cluster_cluster };

/// Counts of Euclidean kernel invocations.
///
/// A counter is not shared between threads. Parallel loops give each chunk
/// its own counter and merge them with += in chunk order, so totals are
/// exact and independent of scheduling.
struct DistanceCounter {
    std::uint64_t data_to_cluster = 0;
    std::uint64_t cluster_to_cluster = 0;

    void reset() { *this = DistanceCounter{}; }

    DistanceCounter& operator+=(const DistanceCounter& other) {
        data_to_cluster += other.data_to_cluster;
        cluster_to_cluster += other.cluster_to_cluster;
        return *this;
    }

    friend bool operator==(const DistanceCounter&, const DistanceCounter&) = default;
};

/// ||a - b||_2, counted against `kind`. Throws std::invalid_argument on a
/// dimension mismatch.
double euclidean_distance(std::span<const double> a, std::span<const double> b,
                          DistanceCounter& counter, DistanceKind kind);

/// Uncounted squared distance for evaluation metrics and M-step residuals.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

struct KeyedDistance {
    int key;
    double distance;
};

/// Keys of the k smallest distances. Ties go to the smaller key, so the result
/// is unique; it is returned sorted by key. Empty input gives an empty result
/// and k >= values.size() returns every key.
std::vector<int> select_k_smallest(std::vector<KeyedDistance> values, std::size_t k);

/// In-place variant used by the hot loops: partitions `values` so that its first
/// min(k, size) entries are the selected ones. No ordering among them.
void partition_k_smallest(std::span<KeyedDistance> values, std::size_t k);

/// Strict weak order used for every selection: distance first, then key.
inline bool distance_then_key(const KeyedDistance& a, const KeyedDistance& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.key < b.key);
}

/// Fixed-width table of cluster ids, one row per owner (point or cluster).
class SetTable {
public:
    SetTable() = default;
    SetTable(std::size_t rows, std::size_t width) : rows_(rows), width_(width), ids_(rows * width, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t width() const { return width_; }

    std::span<const int> row(std::size_t r) const { return {ids_.data() + r * width_, width_}; }
    std::span<int> row(std::size_t r) { return {ids_.data() + r * width_, width_}; }

    friend bool operator==(const SetTable&, const SetTable&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t width_ = 0;
    std::vector<int> ids_;
};

}  // namespace trunccluster
