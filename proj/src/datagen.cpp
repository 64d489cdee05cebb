#include "trunccluster/datagen.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "trunccluster/rng.hpp"

namespace trunccluster {

BirchData generate_birch(const BirchSpec& spec, const Executor& exec) {
    if (spec.grid_side == 0 || spec.samples_per_cluster == 0)
        throw std::invalid_argument("generate_birch: grid_side and samples_per_cluster must be positive");
    if (!(spec.cluster_sigma_sq > 0.0) || !(spec.spacing > 0.0))
        throw std::invalid_argument("generate_birch: variance and spacing must be positive");

    const std::size_t n_clusters = spec.n_clusters();
    const std::size_t samples = spec.samples_per_cluster;
    Matrix centers(n_clusters, 2);
    for (std::size_t i = 0; i < spec.grid_side; ++i)
        for (std::size_t j = 0; j < spec.grid_side; ++j) {
            centers(i * spec.grid_side + j, 0) = static_cast<double>(i) * spec.spacing;
            centers(i * spec.grid_side + j, 1) = static_cast<double>(j) * spec.spacing;
        }

    Matrix points(spec.n_points(), 2);
    const double sigma = std::sqrt(spec.cluster_sigma_sq);
    Executor cluster_exec = exec;
    cluster_exec.chunk_size = 16;
    cluster_exec.for_chunks(n_clusters, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t c = begin; c < end; ++c) {
            Rng rng(derive_seed(spec.seed, c));
            for (std::size_t s = 0; s < samples; ++s) {
                auto row = points.row(c * samples + s);
                row[0] = centers(c, 0) + sigma * rng.normal();
                row[1] = centers(c, 1) + sigma * rng.normal();
            }
        }
    });
    return {Dataset(std::move(points)), std::move(centers)};
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, MatrixFormat format) {
    std::vector<std::string_view> fields;
    if (format == MatrixFormat::csv) {
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    } else {
        std::size_t pos = 0;
        while (pos < line.size()) {
            const auto first = line.find_first_not_of(" \t\r", pos);
            if (first == std::string_view::npos) break;
            auto last = line.find_first_of(" \t\r", first);
            if (last == std::string_view::npos) last = line.size();
            fields.push_back(line.substr(first, last - first));
            pos = last;
        }
    }
    return fields;
}

enum class FieldStatus { ok, not_numeric, not_finite };

FieldStatus parse_field(std::string_view field, double& value) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return FieldStatus::not_numeric;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) return FieldStatus::not_numeric;
    return std::isfinite(value) ? FieldStatus::ok : FieldStatus::not_finite;
}

}  // namespace

Dataset parse_matrix(std::string_view text, MatrixFormat format) {
    std::vector<double> values;
    std::size_t dims = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    bool seen_content = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (trim(line).empty()) {
            if (nl == text.size()) break;
            continue;
        }
        const auto fields = split_fields(line, format);
        const bool first = !seen_content;
        seen_content = true;

        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto status = parse_field(fields[i], row[i]);
            if (status == FieldStatus::ok) continue;
            if (first && format == MatrixFormat::csv && status == FieldStatus::not_numeric && i == 0) {
                row.clear();
                break;
            }
            throw ParseError(line_no, i + 1,
                             status == FieldStatus::not_finite
                                 ? "non-finite value '" + std::string(fields[i]) + "'"
                                 : "non-numeric field '" + std::string(fields[i]) + "'");
        }
        if (row.empty()) continue;  // header
        if (dims == 0) dims = row.size();
        if (row.size() != dims)
            throw ParseError(line_no, std::min(row.size(), dims) + 1,
                             "expected " + std::to_string(dims) + " fields, found " + std::to_string(row.size()));
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
        if (nl == text.size()) break;
    }
    if (rows == 0) throw std::runtime_error("parse_matrix: no data rows");
    return Dataset(Matrix(rows, dims, std::move(values)));
}

Dataset load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_matrix(buffer.str(), format);
}

void write_csv(const std::filesystem::path& path, const Matrix& values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[64];
    std::string line;
    for (std::size_t r = 0; r < values.rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < values.cols(); ++c) {
            if (c) line.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof buf, values(r, c));
            line.append(buf, res.ptr);
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset standardize(const Dataset& data) {
    const std::size_t n = data.n_points();
    const std::size_t d = data.dims();
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) mean[k] += data.point(i)[k];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = data.point(i)[k] - mean[k];
            var[k] += diff * diff;
        }
    Matrix out(n, d);
    for (std::size_t k = 0; k < d; ++k) {
        const double sd = std::sqrt(var[k] / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) out(i, k) = (data.point(i)[k] - mean[k]) / (sd > 0.0 ? sd : 1.0);
    }
    return Dataset(std::move(out));
}

}  // namespace trunccluster
