#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sma/error.hpp"
#include "sma/model.hpp"
#include "sma/signal.hpp"

namespace sma {

enum class PlanKind { kfold, loso };

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::string held_out_subject;  // loso only
};

struct FoldPlan {
  PlanKind kind = PlanKind::kfold;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool stratified = false;
  std::vector<Fold> folds;
};

/// Seeded shuffle, then partition into k folds whose sizes differ by at
/// most one. Stratified by class when every class has >= k windows.
FoldPlan plan_kfold(const WindowedDataset& ds, std::size_t k, std::uint64_t seed);

/// One fold per subject (sorted by id); the test set is all of its windows.
FoldPlan plan_loso(const WindowedDataset& ds);

/// Throws InvariantError if test sets overlap, miss a window, are
/// unbalanced (kfold), or leak a subject into training (loso).
void check_plan(const FoldPlan& plan, const WindowedDataset& ds);

enum class Mode { identification, generalized, personalized };

std::string_view to_string(Mode mode);
std::string_view to_string(PlanKind kind);
Mode parse_mode(std::string_view text);

struct Summary {
  double mean = 0;
  double std = 0;  // sample (n-1) deviation; 0 for a single value
};

Summary summarize(std::span<const double> values);

struct FoldResult {
  double accuracy = 0;
  double macro_f1 = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::string held_out_subject;
};

struct RunReport {
  std::string modality;
  Task task = Task::emotion4;
  Mode mode = Mode::personalized;
  PlanKind plan = PlanKind::kfold;
  std::size_t window_count = 0;
  std::size_t subject_count = 0;
  std::vector<FoldResult> folds;
  Summary accuracy;
  Summary macro_f1;
  bool skipped = false;
  std::string warning;
};

/// A failure inside one fold, tagged with its index.
class FoldError : public Error {
 public:
  FoldError(std::size_t fold, const Error& inner)
      : Error("fold " + std::to_string(fold) + ": " + inner.what()), fold_(fold), kind_(inner.kind()) {}
  const char* kind() const noexcept override { return kind_.c_str(); }
  std::size_t fold() const { return fold_; }

 private:
  std::size_t fold_;
  std::string kind_;
};

/// Trains and scores one model per fold. Fold i builds its model and
/// shuffles with seed (model.seed XOR i). Folds run on up to `jobs`
/// threads; results do not depend on `jobs`.
RunReport run_experiment(const WindowedDataset& ds, const FoldPlan& plan, ResTcnConfig model, Mode mode,
                         std::size_t jobs = 1);

struct SuiteConfig {
  DatasetOptions data;
  ResTcnConfig model;
  Task emotion_task = Task::emotion4;
  std::size_t folds = 10;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  std::vector<std::string> modalities{kModalities.begin(), kModalities.end()};
};

struct SuiteResult {
  std::vector<std::string> subjects;
  std::vector<RunReport> reports;
};

using ProgressFn = std::function<void(const RunReport&)>;

/// Every modality x {identification, generalized, personalized}. A modality
/// missing from any subject yields three skipped reports with a warning.
SuiteResult run_full_suite(const std::filesystem::path& data_root, const SuiteConfig& config,
                           const ProgressFn& progress = {});

}  // namespace sma
