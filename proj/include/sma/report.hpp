#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sma/eval.hpp"

namespace sma {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const RunReport& report);
nlohmann::json settings_json(const SuiteConfig& config);

/// Deterministic report document: no timestamps, stable key order.
nlohmann::json report_document(const std::vector<std::string>& subjects, const std::vector<RunReport>& reports,
                               const SuiteConfig& config);

/// Plain-text table in modality order with identification, generalized
/// and personalized columns, values as percent mean ± std.
std::string render_table(const SuiteResult& result);

/// Writes <stem>.json, <stem>.txt and a <stem>.meta.json sidecar holding
/// the wall-clock timestamp and elapsed seconds.
void write_report_files(const std::filesystem::path& out_dir, const std::string& stem, const SuiteResult& result,
                        const SuiteConfig& config, double elapsed_s);

}  // namespace sma
