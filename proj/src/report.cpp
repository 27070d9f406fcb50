#include "sma/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "sma/error.hpp"

namespace sma {
using nlohmann::json;

namespace {
json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }
}  // namespace

json to_json(const RunReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"accuracy", f.accuracy},
                     {"macro_f1", f.macro_f1},
                     {"train_size", f.train_size},
                     {"test_size", f.test_size},
                     {"held_out_subject", f.held_out_subject}});
  }
  return {{"modality", r.modality},
          {"task", std::string(to_string(r.task))},
          {"mode", std::string(to_string(r.mode))},
          {"plan", std::string(to_string(r.plan))},
          {"window_count", r.window_count},
          {"subject_count", r.subject_count},
          {"skipped", r.skipped},
          {"warning", r.warning},
          {"accuracy", summary_json(r.accuracy)},
          {"macro_f1", summary_json(r.macro_f1)},
          {"folds", folds}};
}

json settings_json(const SuiteConfig& c) {
  json blocks = json::array();
  for (const auto& b : c.model.blocks) {
    blocks.push_back({{"kernel", b.kernel}, {"channels", b.channels}, {"dilation", b.dilation}});
  }
  return {{"window_s", c.data.window.window_s},
          {"stride_s", c.data.window.stride_s},
          {"chest_decimation", c.data.chest_decimation},
          {"folds", c.folds},
          {"seed", c.seed},
          {"emotion_task", std::string(to_string(c.emotion_task))},
          {"model",
           {{"stem", {{"kernel", c.model.stem.kernel}, {"channels", c.model.stem.channels}, {"dilation", c.model.stem.dilation}}},
            {"blocks", blocks},
            {"lr", c.model.lr},
            {"batch_size", c.model.batch_size},
            {"epochs", c.model.epochs}}}};
}

json report_document(const std::vector<std::string>& subjects, const std::vector<RunReport>& reports,
                     const SuiteConfig& config) {
  json runs = json::array();
  for (const auto& r : reports) runs.push_back(to_json(r));
  return {{"schema", "sma.report"},
          {"schema_version", kReportSchemaVersion},
          {"subject_count", subjects.size()},
          {"subjects", subjects},
          {"settings", settings_json(config)},
          {"reports", runs}};
}

namespace {

std::string cell(const RunReport* r, bool f1) {
  if (!r) return "";
  if (r->skipped) return "skipped";
  const Summary& s = f1 ? r->macro_f1 : r->accuracy;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%6.2f \xC2\xB1 %5.2f", 100 * s.mean, 100 * s.std);
  return buf;
}

// Display width, counting each UTF-8 sequence once.
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

std::string pad(const std::string& s, std::size_t w) { return s + std::string(w > width(s) ? w - width(s) : 0, ' '); }

}  // namespace

std::string render_table(const SuiteResult& result) {
  std::vector<std::string> order;
  std::map<std::string, std::map<Mode, const RunReport*>> rows;
  for (const auto& r : result.reports) {
    if (!rows.count(r.modality)) order.push_back(r.modality);
    rows[r.modality][r.mode] = &r;
  }
  constexpr std::size_t kName = 12, kCell = 16;
  std::ostringstream out;
  out << "subjects: " << result.subjects.size() << "\n";
  out << pad("", kName);
  for (const char* h : {"Identification", "Generalized", "Personalized"}) out << " | " << pad(h, 2 * kCell + 1);
  out << "\n" << pad("Modality", kName);
  for (int i = 0; i < 3; ++i) out << " | " << pad("Accuracy", kCell) << " " << pad("F1", kCell);
  out << "\n" << std::string(kName + 3 * (3 + 2 * kCell + 1), '-') << "\n";
  for (const auto& name : order) {
    std::string label = name;
    if (auto dot = label.find('.'); dot != std::string::npos) label[dot] = ' ';
    out << pad(label, kName);
    for (Mode m : {Mode::identification, Mode::generalized, Mode::personalized}) {
      const auto it = rows[name].find(m);
      const RunReport* r = it == rows[name].end() ? nullptr : it->second;
      out << " | " << pad(cell(r, false), kCell) << " " << pad(cell(r, true), kCell);
    }
    out << "\n";
  }
  return out.str();
}

namespace {
void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
}
}  // namespace

void write_report_files(const std::filesystem::path& out_dir, const std::string& stem, const SuiteResult& result,
                        const SuiteConfig& config, double elapsed_s) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / (stem + ".json"), report_document(result.subjects, result.reports, config).dump(2) + "\n");
  write_text(out_dir / (stem + ".txt"), render_table(result));
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  const json meta = {{"generated_at", stamp}, {"elapsed_s", elapsed_s}};
  write_text(out_dir / (stem + ".meta.json"), meta.dump(2) + "\n");
}

}  // namespace sma
