#include "trunccluster/report.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trunccluster {

using nlohmann::json;

json record_to_json(const IterationRecord& record) {
    json j;
    j["schema"] = kSchemaVersion;
    j["index"] = record.index;
    j["free_energy"] = record.free_energy;
    j["quantization_error"] = record.quantization_error;
    j["log_likelihood"] = record.log_likelihood ? json(*record.log_likelihood) : json(nullptr);
    j["data_to_cluster_evals"] = record.data_to_cluster_evals;
    j["cluster_to_cluster_evals"] = record.cluster_to_cluster_evals;
    j["wall_seconds"] = record.wall_seconds;
    return j;
}

IterationRecord record_from_json(const json& j) {
    if (j.value("schema", 0) != kSchemaVersion) throw std::runtime_error("trace record: unsupported schema");
    IterationRecord r;
    r.index = j.at("index").get<std::size_t>();
    r.free_energy = j.at("free_energy").get<double>();
    r.quantization_error = j.at("quantization_error").get<double>();
    if (j.contains("log_likelihood") && !j["log_likelihood"].is_null())
        r.log_likelihood = j["log_likelihood"].get<double>();
    r.data_to_cluster_evals = j.at("data_to_cluster_evals").get<std::uint64_t>();
    r.cluster_to_cluster_evals = j.at("cluster_to_cluster_evals").get<std::uint64_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    return r;
}

std::string trace_to_jsonl(const RunTrace& trace) {
    std::string out;
    for (const auto& rec : trace.records) {
        out += record_to_json(rec).dump();
        out += '\n';
    }
    return out;
}

RunTrace trace_from_jsonl(const std::string& text) {
    RunTrace trace;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        trace.records.push_back(record_from_json(json::parse(line)));
    }
    return trace;
}

std::string params_digest(const ModelParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    };
    for (double v : params.means.values()) mix(v);
    mix(params.sigma_sq);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json run_summary(const RunConfig& config, const RunResult& result, std::size_t dims, const SummaryExtras& extras) {
    const auto& records = result.trace.records;
    json j;
    j["schema"] = kSchemaVersion;
    j["algorithm"] = std::string(algorithm_name(config.algorithm));
    j["input"] = extras.input;
    j["config"] = {{"clusters", result.trace.n_clusters},
                   {"c_prime", result.trace.c_prime},
                   {"g", result.trace.g},
                   {"explore", result.trace.explore},
                   {"initial_esteps", config.initial_esteps},
                   {"max_iters", config.max_iters},
                   {"tol", config.tol},
                   {"seed", config.seed},
                   {"with_loglik", config.with_loglik}};
    j["data"] = {{"n_points", result.trace.n_points}, {"dims", dims}};
    j["iterations"] = records.empty() ? 0 : records.size() - 1;
    j["converged"] = result.converged;
    j["seeding_data_to_cluster_evals"] = result.seeding_evals.data_to_cluster;
    json final_state;
    if (!records.empty()) {
        final_state["quantization_error"] = records.back().quantization_error;
        final_state["free_energy"] = records.back().free_energy;
        final_state["log_likelihood"] =
            records.back().log_likelihood ? json(*records.back().log_likelihood) : json(nullptr);
    }
    final_state["sigma_sq"] = result.params.sigma_sq;
    j["final"] = final_state;
    j["params_digest"] = params_digest(result.params);
    j["parity_iteration"] = extras.parity_iteration ? json(*extras.parity_iteration) : json(nullptr);
    j["parity_reached"] = extras.parity_evaluated ? json(extras.parity_iteration.has_value()) : json(nullptr);
    if (extras.speedup)
        j["speedup"] = {{"theoretical_min", extras.speedup->theoretical_min}, {"measured", extras.speedup->measured}};
    else
        j["speedup"] = nullptr;
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace trunccluster
