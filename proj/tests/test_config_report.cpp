#include <doctest.h>

#include <fstream>

#include "sma/config.hpp"
#include "sma/error.hpp"
#include "sma/report.hpp"
#include "support/synthetic.hpp"

using namespace sma;
using nlohmann::json;

TEST_CASE("config defaults") {
  const auto c = parse_config(json::object());
  CHECK(c.suite.data.window.window_s == 5.0);
  CHECK(c.suite.data.window.stride_s == 2.5);
  CHECK(c.suite.data.chest_decimation == 10);
  CHECK(c.suite.folds == 10);
  CHECK(c.suite.seed == 42);
  CHECK(c.suite.model.epochs == 30);
  CHECK(c.suite.model.batch_size == 32);
  CHECK(c.suite.model.lr == 1e-3);
  CHECK(c.suite.model.stem == ConvSpec{7, 32, 1});
  REQUIRE(c.suite.model.blocks.size() == 3);
  CHECK(c.suite.model.blocks[2] == ConvSpec{3, 32, 4});
  CHECK(c.suite.modalities.size() == 10);
  CHECK(c.modality == "chest.RESP");
  CHECK(c.risk.table == RiskMatrix::defaults().table);
}

TEST_CASE("config overrides and errors") {
  const auto c = parse_config(json::parse(R"({
    "data_root": "/data", "window_s": 4, "chest_decimation": 1, "task": "stress_binary",
    "mode": "generalized", "plan": "kfold", "modalities": ["wrist.BVP"],
    "model": {"epochs": 3, "blocks": [{"kernel": 2, "channels": 8, "dilation": 3}]},
    "risk": {"lower": 0.6, "upper": 0.95}
  })"));
  CHECK(c.data_root == "/data");
  CHECK(c.suite.data.window.window_s == 4);
  CHECK(c.suite.data.chest_decimation == 1);
  CHECK(c.task == Task::stress_binary);
  CHECK(c.mode == Mode::generalized);
  CHECK(c.plan == PlanKind::kfold);
  CHECK(c.suite.modalities == std::vector<std::string>{"wrist.BVP"});
  CHECK(c.suite.model.epochs == 3);
  CHECK(c.suite.model.blocks == std::vector<ConvSpec>{{2, 8, 3}});
  CHECK(c.risk.lower == 0.6);

  CHECK_THROWS_AS(parse_config(json::parse(R"({"windw_s": 4})")), FormatError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"window_s": "long"})")), FormatError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"task": "joy"})")), FormatError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"window_s": -1})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"modalities": ["chest.XYZ"]})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"model": {"blocks": []}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"risk": {"lower": 0.95, "upper": 0.6}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"risk": {"table": [["low"]]}})")), FormatError);
}

TEST_CASE("risk matrix json round trip") {
  auto m = RiskMatrix::defaults();
  m.lower = 0.55;
  const auto back = risk_matrix_from_json(to_json(m));
  CHECK(back.table == m.table);
  CHECK(back.lower == 0.55);
}

namespace {

SuiteResult fake_result() {
  SuiteResult r;
  r.subjects = {"S2", "S3"};
  for (auto m : kModalities) {
    for (auto mode : {Mode::identification, Mode::generalized, Mode::personalized}) {
      RunReport rep;
      rep.modality = std::string(m);
      rep.mode = mode;
      rep.task = mode == Mode::identification ? Task::identification : Task::emotion4;
      rep.plan = mode == Mode::generalized ? PlanKind::loso : PlanKind::kfold;
      rep.folds = {{0.9, 0.8, 90, 10, ""}, {1.0, 1.0, 90, 10, ""}};
      rep.accuracy = {0.95, 0.0707};
      rep.macro_f1 = {0.9, 0.1414};
      rep.skipped = m == "wrist.EDA";
      r.reports.push_back(rep);
    }
  }
  return r;
}

}  // namespace

TEST_CASE("report document") {
  const auto result = fake_result();
  SuiteConfig cfg;
  const auto doc = report_document(result.subjects, result.reports, cfg);
  CHECK(doc["schema_version"] == kReportSchemaVersion);
  CHECK(doc["subject_count"] == 2);
  REQUIRE(doc["reports"].size() == 30);
  const auto& first = doc["reports"][0];
  for (const char* key : {"modality", "task", "mode", "plan", "window_count", "subject_count", "skipped", "warning",
                          "accuracy", "macro_f1", "folds"}) {
    CHECK(first.contains(key));
  }
  CHECK(first["accuracy"]["mean"] == 0.95);
  CHECK(doc.dump() == report_document(result.subjects, result.reports, cfg).dump());
  CHECK(doc["settings"]["chest_decimation"] == 10);
}

TEST_CASE("rendered table follows modality order") {
  const auto text = render_table(fake_result());
  CHECK(text.starts_with("subjects: 2\n"));
  std::size_t last = 0;
  for (const char* row : {"chest ACC", "chest ECG", "chest EDA", "chest EMG", "chest RESP", "chest TEMP", "wrist ACC",
                          "wrist BVP", "wrist EDA", "wrist TEMP"}) {
    const auto pos = text.find(row);
    REQUIRE(pos != std::string::npos);
    CHECK(pos > last);
    last = pos;
  }
  CHECK(text.find("95.00 \xC2\xB1  7.07") != std::string::npos);
  CHECK(text.find("skipped") != std::string::npos);
}

TEST_CASE("report files: deterministic json plus timestamp sidecar") {
  const auto dir = test::scratch_dir("report_files");
  SuiteConfig cfg;
  write_report_files(dir, "suite", fake_result(), cfg, 1.5);
  auto read = [](const std::filesystem::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  const auto first = read(dir / "suite.json");
  write_report_files(dir, "suite", fake_result(), cfg, 2.5);
  CHECK(read(dir / "suite.json") == first);
  CHECK(json::parse(read(dir / "suite.meta.json")).contains("generated_at"));
  CHECK(read(dir / "suite.txt").find("chest RESP") != std::string::npos);
}
