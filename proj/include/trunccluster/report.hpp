// JSON encodings for traces and run summaries. Every document carries
// "schema": 1.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "trunccluster/runner.hpp"

namespace trunccluster {

inline constexpr int kSchemaVersion = 1;

nlohmann::json record_to_json(const IterationRecord& record);
IterationRecord record_from_json(const nlohmann::json& j);

/// One compact JSON object per record, newline-terminated.
std::string trace_to_jsonl(const RunTrace& trace);
/// Reads records back; metadata fields of the returned trace stay default.
RunTrace trace_from_jsonl(const std::string& text);

/// 64-bit FNV-1a over the bit patterns of the means and the variance, as hex.
std::string params_digest(const ModelParams& params);

struct SummaryExtras {
    std::optional<std::size_t> parity_iteration;
    bool parity_evaluated = false;
    std::optional<SpeedupReport> speedup;
    std::string input;
};

nlohmann::json run_summary(const RunConfig& config, const RunResult& result, std::size_t dims,
                           const SummaryExtras& extras);

/// Writes `text` to `path`, replacing any existing file.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace trunccluster
