#include "sma/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "sma/metrics.hpp"

namespace sma {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::identification: return "identification";
    case Mode::generalized: return "generalized";
    case Mode::personalized: return "personalized";
  }
  return "?";
}

std::string_view to_string(PlanKind kind) { return kind == PlanKind::kfold ? "kfold" : "loso"; }

Mode parse_mode(std::string_view text) {
  if (text == "identification") return Mode::identification;
  if (text == "generalized") return Mode::generalized;
  if (text == "personalized") return Mode::personalized;
  throw ArgumentError("unknown mode '" + std::string(text) + "'");
}

FoldPlan plan_kfold(const WindowedDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("k-fold needs k >= 2");
  if (ds.size() < k) {
    throw ArgumentError("k-fold with k=" + std::to_string(k) + " needs at least k windows, have " +
                        std::to_string(ds.size()));
  }
  FoldPlan plan;
  plan.kind = PlanKind::kfold;
  plan.k = k;
  plan.seed = seed;
  std::mt19937_64 rng(seed);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.windows[i].label].push_back(i);
  plan.stratified = std::all_of(by_class.begin(), by_class.end(), [&](const auto& kv) { return kv.second.size() >= k; });

  std::vector<std::size_t> order;
  order.reserve(ds.size());
  std::vector<std::vector<std::size_t>> tests(k);
  if (plan.stratified) {
    // Per-class shuffles laid end to end, dealt round-robin.
    for (auto& [cls, ids] : by_class) {
      std::shuffle(ids.begin(), ids.end(), rng);
      order.insert(order.end(), ids.begin(), ids.end());
    }
    for (std::size_t j = 0; j < order.size(); ++j) tests[j % k].push_back(order[j]);
  } else {
    std::cerr << "warning: some class has fewer than " << k << " windows; k-fold plan is unstratified\n";
    order.resize(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t base = order.size() / k, extra = order.size() % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t len = base + (f < extra ? 1 : 0);
      tests[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
  }

  std::vector<std::size_t> owner(ds.size());
  for (std::size_t f = 0; f < k; ++f) {
    for (auto i : tests[f]) owner[i] = f;
  }
  for (std::size_t f = 0; f < k; ++f) {
    Fold fold;
    std::sort(tests[f].begin(), tests[f].end());
    fold.test = std::move(tests[f]);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (owner[i] != f) fold.train.push_back(i);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

FoldPlan plan_loso(const WindowedDataset& ds) {
  const auto subjects = ds.subjects();
  if (subjects.size() < 2) throw ArgumentError("leave-one-subject-out needs at least two subjects");
  FoldPlan plan;
  plan.kind = PlanKind::loso;
  plan.k = subjects.size();
  for (const auto& s : subjects) {
    Fold fold;
    fold.held_out_subject = s;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.windows[i].subject_id == s ? fold.test : fold.train).push_back(i);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

void check_plan(const FoldPlan& plan, const WindowedDataset& ds) {
  std::vector<int> seen(ds.size(), 0);
  std::size_t min_size = ds.size(), max_size = 0;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    std::vector<char> in_test(ds.size(), 0);
    for (auto i : fold.test) {
      if (i >= ds.size()) throw InvariantError("fold " + std::to_string(f) + " references a missing window");
      seen[i]++;
      in_test[i] = 1;
    }
    if (fold.train.size() + fold.test.size() != ds.size()) {
      throw InvariantError("fold " + std::to_string(f) + ": train and test do not partition the dataset");
    }
    for (auto i : fold.train) {
      if (i >= ds.size() || in_test[i]) throw InvariantError("fold " + std::to_string(f) + ": train overlaps test");
    }
    min_size = std::min(min_size, fold.test.size());
    max_size = std::max(max_size, fold.test.size());
    if (plan.kind == PlanKind::loso) {
      for (auto i : fold.test) {
        if (ds.windows[i].subject_id != fold.held_out_subject) {
          throw InvariantError("fold " + std::to_string(f) + ": test holds another subject's window");
        }
      }
      for (auto i : fold.train) {
        if (ds.windows[i].subject_id == fold.held_out_subject) {
          throw InvariantError("fold " + std::to_string(f) + ": held-out subject appears in training");
        }
      }
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (seen[i] != 1) {
      throw InvariantError("window " + std::to_string(i) + " appears in " + std::to_string(seen[i]) + " test sets");
    }
  }
  if (plan.kind == PlanKind::kfold && !plan.folds.empty() && max_size - min_size > 1) {
    throw InvariantError("k-fold test sizes differ by more than one");
  }
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1));
  }
  return s;
}

namespace {

FoldResult run_fold(const WindowedDataset& ds, const Fold& fold, ResTcnConfig model_config, std::uint64_t seed) {
  model_config.seed = seed;
  ResTcnModel model(model_config);
  train(model, ds, fold.train, seed);
  const auto pred = predict(model, ds, fold.test);
  std::vector<int> truth;
  truth.reserve(fold.test.size());
  for (auto i : fold.test) truth.push_back(ds.windows[i].label);
  const auto cm = confusion(truth, pred.classes, static_cast<std::size_t>(ds.num_classes));
  return {accuracy(cm), macro_f1(cm), fold.train.size(), fold.test.size(), fold.held_out_subject};
}

}  // namespace

RunReport run_experiment(const WindowedDataset& ds, const FoldPlan& plan, ResTcnConfig model, Mode mode,
                         std::size_t jobs) {
  check_plan(plan, ds);
  model.in_channels = ds.axes;
  model.num_classes = ds.num_classes;

  RunReport report;
  report.modality = ds.modality;
  report.task = ds.task;
  report.mode = mode;
  report.plan = plan.kind;
  report.window_count = ds.size();
  report.subject_count = ds.subjects().size();
  report.folds.resize(plan.folds.size());

  std::vector<std::exception_ptr> errors(plan.folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f; (f = next.fetch_add(1)) < plan.folds.size();) {
      try {
        report.folds[f] = run_fold(ds, plan.folds[f], model, model.seed ^ static_cast<std::uint64_t>(f));
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, plan.folds.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t f = 0; f < errors.size(); ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const Error& e) {
      throw FoldError(f, e);
    }
  }

  std::vector<double> acc, f1;
  for (const auto& r : report.folds) {
    acc.push_back(r.accuracy);
    f1.push_back(r.macro_f1);
  }
  report.accuracy = summarize(acc);
  report.macro_f1 = summarize(f1);
  return report;
}

SuiteResult run_full_suite(const std::filesystem::path& data_root, const SuiteConfig& config,
                           const ProgressFn& progress) {
  SuiteResult result;
  const auto dirs = list_subjects(data_root);
  if (dirs.empty()) throw IoError("no subjects under " + data_root.string());
  for (const auto& d : dirs) result.subjects.push_back(d.filename().string());

  struct Run {
    Mode mode;
    Task task;
  };
  const Run runs[] = {{Mode::identification, Task::identification},
                      {Mode::generalized, config.emotion_task},
                      {Mode::personalized, config.emotion_task}};

  for (const auto& modality : config.modalities) {
    std::optional<WindowedDataset> emotion;
    for (const auto& run : runs) {
      RunReport report;
      try {
        WindowedDataset ds;
        if (run.task == Task::identification) {
          ds = build_dataset(dirs, modality, run.task, config.data);
        } else {
          if (!emotion) emotion = build_dataset(dirs, modality, run.task, config.data);
          ds = *emotion;
        }
        const FoldPlan plan = run.mode == Mode::generalized ? plan_loso(ds) : plan_kfold(ds, config.folds, config.seed);
        ResTcnConfig model = config.model;
        model.seed = config.seed;
        report = run_experiment(ds, plan, model, run.mode, config.jobs);
      } catch (const LookupError& e) {
        report = RunReport{};
        report.modality = modality;
        report.task = run.task;
        report.mode = run.mode;
        report.plan = run.mode == Mode::generalized ? PlanKind::loso : PlanKind::kfold;
        report.skipped = true;
        report.warning = e.what();
      }
      if (progress) progress(report);
      result.reports.push_back(std::move(report));
    }
  }
  return result;
}

}  // namespace sma
