#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sma/eval.hpp"
#include "sma/risk.hpp"

namespace sma {

/// Everything a CLI run needs. Every field has a default; a config file
/// only names what it changes.
struct Config {
  std::filesystem::path data_root;
  std::filesystem::path output_dir = "out";
  SuiteConfig suite;
  Task task = Task::emotion4;
  Mode mode = Mode::personalized;
  std::optional<PlanKind> plan;  // overrides the plan implied by mode
  std::string modality = "chest.RESP";
  RiskMatrix risk = RiskMatrix::defaults();
};

/// Unknown keys and ill-typed values throw FormatError; out-of-range
/// values throw ValidationError.
Config parse_config(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RiskMatrix& matrix);
RiskMatrix risk_matrix_from_json(const nlohmann::json& doc);

}  // namespace sma
