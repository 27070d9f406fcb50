// sma: train, evaluate and report Res-TCN stress/affect detectors on
// converted WESAD recordings, and assess e-coaching risk.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sma/config.hpp"
#include "sma/error.hpp"
#include "sma/eval.hpp"
#include "sma/gradcheck.hpp"
#include "sma/model.hpp"
#include "sma/report.hpp"
#include "sma/risk.hpp"
#include "sma/signal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kMissingData = 2, kBadConfig = 3, kInvariant = 4 };

// Failures are reported as one JSON line on stderr.
int fail(int code, std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", {{"exit", code}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
  return code;
}

int exit_for(const sma::Error& e) {
  const std::string kind = e.kind();
  if (kind == "invariant") return kInvariant;
  if (kind == "io" || kind == "lookup" || kind == "format" || kind == "corruption" || kind == "validation") {
    return kMissingData;
  }
  return kFailure;
}

struct Flags {
  std::string config_path;
  std::string out;
  std::vector<std::string> modalities;
  std::string task;
  std::string mode;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
};

sma::Config resolve_config(const Flags& f) {
  sma::Config c = f.config_path.empty() ? sma::parse_config(json::object()) : sma::load_config(f.config_path);
  if (const char* env = std::getenv("SMA_DATA"); env && *env) c.data_root = env;
  if (!f.out.empty()) c.output_dir = f.out;
  if (!f.modalities.empty()) {
    for (const auto& m : f.modalities) {
      if (!sma::is_known_modality(m)) throw sma::ValidationError("unknown modality '" + m + "'");
    }
    c.modality = f.modalities.front();
    c.suite.modalities = f.modalities;
  }
  try {
    if (!f.task.empty()) c.task = sma::parse_task(f.task);
    if (!f.mode.empty()) c.mode = sma::parse_mode(f.mode);
  } catch (const sma::ArgumentError& e) {
    throw sma::FormatError(e.what());
  }
  if (f.jobs) {
    if (*f.jobs < 1) throw sma::ValidationError("--jobs must be >= 1");
    c.suite.jobs = *f.jobs;
  }
  if (f.seed) c.suite.seed = *f.seed;
  return c;
}

std::vector<fs::path> subjects_or_throw(const sma::Config& c) {
  if (c.data_root.empty()) throw sma::IoError("no data root: set data_root in the config or SMA_DATA");
  auto dirs = sma::list_subjects(c.data_root);
  if (dirs.empty()) throw sma::IoError("no subjects under " + c.data_root.string());
  return dirs;
}

sma::Task task_for(const sma::Config& c) {
  if (c.mode == sma::Mode::identification) return sma::Task::identification;
  return c.task == sma::Task::identification ? c.suite.emotion_task : c.task;
}

int cmd_convert_check(const sma::Config& c) {
  const auto dirs = subjects_or_throw(c);
  json subjects = json::array();
  for (const auto& d : dirs) {
    const auto rec = sma::load_recording(d);
    json channels = json::array();
    for (const auto& ch : rec.channels) {
      channels.push_back({{"name", ch.name}, {"sample_rate", ch.sample_rate}, {"axes", ch.axis_count()},
                          {"sample_count", ch.length()}});
    }
    subjects.push_back({{"subject_id", rec.subject_id}, {"labels", rec.labels.size()}, {"channels", channels}});
  }
  std::cout << json{{"subject_count", dirs.size()}, {"subjects", subjects}}.dump() << "\n";
  return kOk;
}

int cmd_train(const sma::Config& c) {
  const auto dirs = subjects_or_throw(c);
  const auto task = task_for(c);
  const auto ds = sma::build_dataset(dirs, c.modality, task, c.suite.data);
  if (ds.empty()) throw sma::ValidationError("no labelled windows for " + c.modality);
  sma::ResTcnConfig mc = c.suite.model;
  mc.in_channels = ds.axes;
  mc.num_classes = ds.num_classes;
  mc.seed = c.suite.seed;
  auto model = sma::build(mc);
  const auto result = sma::train(model, ds, c.suite.seed);
  fs::create_directories(c.output_dir);
  const fs::path ckpt = c.output_dir / "model.rtcn";
  sma::save(model, ckpt);
  const json summary = {{"checkpoint", ckpt.string()},  {"modality", c.modality},
                        {"task", sma::to_string(task)}, {"windows", ds.size()},
                        {"loss_curve", result.loss_curve}};
  std::ofstream(c.output_dir / "train.json") << summary.dump(2) << "\n";
  std::cout << ckpt.string() << "\n";
  return kOk;
}

int cmd_eval(const sma::Config& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto dirs = subjects_or_throw(c);
  const auto ds = sma::build_dataset(dirs, c.modality, task_for(c), c.suite.data);
  const auto kind = c.plan.value_or(c.mode == sma::Mode::generalized ? sma::PlanKind::loso : sma::PlanKind::kfold);
  const auto plan = kind == sma::PlanKind::loso ? sma::plan_loso(ds) : sma::plan_kfold(ds, c.suite.folds, c.suite.seed);
  sma::ResTcnConfig mc = c.suite.model;
  mc.seed = c.suite.seed;
  sma::SuiteResult result;
  for (const auto& d : dirs) result.subjects.push_back(d.filename().string());
  result.reports.push_back(sma::run_experiment(ds, plan, mc, c.mode, c.suite.jobs));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sma::write_report_files(c.output_dir, "report", result, c.suite, elapsed);
  std::cout << (c.output_dir / "report.json").string() << "\n";
  return kOk;
}

int cmd_suite(const sma::Config& c) {
  const auto start = std::chrono::steady_clock::now();
  subjects_or_throw(c);
  const auto result = sma::run_full_suite(c.data_root, c.suite, [](const sma::RunReport& r) {
    std::cerr << r.modality << " " << sma::to_string(r.mode)
              << (r.skipped ? " skipped" : " acc=" + std::to_string(r.accuracy.mean)) << "\n";
  });
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sma::write_report_files(c.output_dir, "suite", result, c.suite, elapsed);
  std::cout << sma::render_table(result);
  return kOk;
}

int cmd_risk(const sma::Config& c, const std::string& impact, double accuracy) {
  sma::RiskLevel level;
  try {
    level = sma::parse_risk_level(impact);
  } catch (const sma::ArgumentError& e) {
    return fail(kFailure, e.kind(), e.what());
  }
  std::cout << sma::to_string(sma::assess(level, accuracy, c.risk)) << "\n";
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto report = sma::run_gradcheck(seed);
  for (const auto& e : report.entries) {
    std::cout << (e.passed ? "  ok   " : "  FAIL ") << e.name << " max_rel_error=" << e.max_rel_error
              << " tol=" << e.tolerance << "\n";
  }
  std::cout << (report.passed() ? "PASS" : "FAIL") << " max_rel_error=" << report.max_rel_error() << "\n";
  return report.passed() ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Res-TCN stress monitoring pipeline"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--modality", flags.modalities, "modality, e.g. chest.RESP (repeatable for suite)");
    sub->add_option("--task", flags.task, "identification | emotion4 | stress_binary");
    sub->add_option("--mode", flags.mode, "identification | generalized | personalized");
    sub->add_option("--jobs", flags.jobs, "folds trained in parallel");
    sub->add_option("--seed", flags.seed, "master seed");
  };
  auto* convert_check = app.add_subcommand("convert-check", "validate a converted data root");
  auto* train = app.add_subcommand("train", "train one model on all subjects and save a checkpoint");
  auto* eval = app.add_subcommand("eval", "cross-validate one modality/mode");
  auto* suite = app.add_subcommand("suite", "all modalities x identification/generalized/personalized");
  auto* risk = app.add_subcommand("risk", "e-coaching risk from impact and detector accuracy");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  for (auto* sub : {convert_check, train, eval, suite, risk, gradcheck}) add_common(sub);
  std::string impact;
  double accuracy = 0;
  risk->add_option("--impact", impact, "low | moderate | high")->required();
  risk->add_option("--accuracy", accuracy, "detector accuracy in [0,1]")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    const bool config = e.get_name() == "ValidationError" && !flags.config_path.empty();
    return fail(config ? kBadConfig : kFailure, "usage", e.what());
  }

  if (*gradcheck) return cmd_gradcheck(flags.seed.value_or(42));

  sma::Config config;
  try {
    config = resolve_config(flags);
  } catch (const sma::Error& e) {
    return fail(kBadConfig, e.kind(), e.what());
  }

  try {
    if (*convert_check) return cmd_convert_check(config);
    if (*train) return cmd_train(config);
    if (*eval) return cmd_eval(config);
    if (*suite) return cmd_suite(config);
    if (*risk) return cmd_risk(config, impact, accuracy);
  } catch (const sma::Error& e) {
    return fail(exit_for(e), e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "internal", e.what());
  }
  return kFailure;
}
