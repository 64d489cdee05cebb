// Synthetic grid-of-Gaussians data and numeric matrix I/O.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>

#include "trunccluster/core.hpp"
#include "trunccluster/parallel.hpp"

namespace trunccluster {

/// Isotropic Gaussians centred on a grid_side x grid_side lattice.
struct BirchSpec {
    std::size_t grid_side = 5;
    std::size_t samples_per_cluster = 100;
    double cluster_sigma_sq = 1.0;
    /// Distance between horizontally or vertically adjacent centres.
    double spacing = 4.0 * std::sqrt(2.0);
    std::uint64_t seed = 1;

    std::size_t n_clusters() const { return grid_side * grid_side; }
    std::size_t n_points() const { return n_clusters() * samples_per_cluster; }
};

struct BirchData {
    Dataset data;
    /// C x 2; row i*grid_side + j is the centre (i*spacing, j*spacing).
    Matrix centers;
};

/// Points are stored cluster by cluster in centre order. Each cluster draws
/// from its own substream of `spec.seed`, so the output is bit-reproducible.
/// Throws std::invalid_argument for a zero side, zero samples, or non-positive
/// variance or spacing.
BirchData generate_birch(const BirchSpec& spec, const Executor& exec = {});

enum class MatrixFormat { csv, whitespace };

/// Parse failure with 1-based file line and field position.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row),
          column_(column) {}

    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// Reads an N x D numeric matrix. CSV input may start with a header row, which
/// is detected by a non-numeric first field and skipped. Blank lines are
/// ignored. Throws ParseError on ragged rows, non-numeric or non-finite
/// fields and std::runtime_error if the file cannot be opened or is empty.
Dataset load_matrix(const std::filesystem::path& path, MatrixFormat format);

/// Parses from an in-memory buffer with the same rules as load_matrix.
Dataset parse_matrix(std::string_view text, MatrixFormat format);

/// Writes comma-separated rows using shortest round-trip formatting.
void write_csv(const std::filesystem::path& path, const Matrix& values);

/// Per-dimension z-scoring; constant columns are only centred.
Dataset standardize(const Dataset& data);

}  // namespace trunccluster
