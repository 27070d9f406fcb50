#include "sma/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sma/error.hpp"

namespace sma {
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + " must be an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw FormatError("unknown key '" + key + "' in " + where);
  }
}

ConvSpec conv_spec(const json& j, const std::string& where) {
  reject_unknown(j, {"kernel", "channels", "dilation"}, where);
  ConvSpec s;
  s.kernel = j.value("kernel", s.kernel);
  s.channels = j.value("channels", s.channels);
  s.dilation = j.value("dilation", s.dilation);
  return s;
}

ResTcnConfig model_config(const json& j) {
  reject_unknown(j, {"stem", "blocks", "lr", "batch_size", "epochs"}, "model");
  ResTcnConfig c;
  if (j.contains("stem")) c.stem = conv_spec(j["stem"], "model.stem");
  if (j.contains("blocks")) {
    c.blocks.clear();
    for (const auto& b : j["blocks"]) c.blocks.push_back(conv_spec(b, "model.blocks[]"));
  }
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  return c;
}

}  // namespace

json to_json(const RiskMatrix& m) {
  json table = json::array();
  for (const auto& row : m.table) {
    json r = json::array();
    for (auto level : row) r.push_back(std::string(to_string(level)));
    table.push_back(r);
  }
  return {{"lower", m.lower}, {"upper", m.upper}, {"table", table}};
}

RiskMatrix risk_matrix_from_json(const json& j) {
  reject_unknown(j, {"lower", "upper", "table"}, "risk");
  RiskMatrix m = RiskMatrix::defaults();
  m.lower = j.value("lower", m.lower);
  m.upper = j.value("upper", m.upper);
  if (j.contains("table")) {
    const auto& t = j["table"];
    if (!t.is_array() || t.size() != 3) throw FormatError("risk.table must be 3 rows");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!t[i].is_array() || t[i].size() != 3) throw FormatError("risk.table rows must have 3 entries");
      for (std::size_t b = 0; b < 3; ++b) {
        try {
          m.table[i][b] = parse_risk_level(t[i][b].get<std::string>());
        } catch (const ArgumentError& e) {
          throw FormatError(e.what());
        }
      }
    }
  }
  m.validate();
  return m;
}

Config parse_config(const json& doc) {
  Config c;
  try {
    reject_unknown(doc,
                   {"data_root", "output_dir", "window_s", "stride_s", "chest_decimation", "model", "task", "mode",
                    "plan", "modality", "modalities", "folds", "seed", "jobs", "emotion_task", "risk"},
                   "config");
    if (doc.contains("data_root")) c.data_root = doc["data_root"].get<std::string>();
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
    auto& s = c.suite;
    s.data.window.window_s = doc.value("window_s", s.data.window.window_s);
    s.data.window.stride_s = doc.value("stride_s", s.data.window.stride_s);
    s.data.chest_decimation = doc.value("chest_decimation", s.data.chest_decimation);
    if (doc.contains("model")) s.model = model_config(doc["model"]);
    s.folds = doc.value("folds", s.folds);
    s.seed = doc.value("seed", s.seed);
    s.jobs = doc.value("jobs", s.jobs);
    if (doc.contains("modalities")) s.modalities = doc["modalities"].get<std::vector<std::string>>();
    c.modality = doc.value("modality", c.modality);
    if (doc.contains("task")) c.task = parse_task(doc["task"].get<std::string>());
    if (doc.contains("emotion_task")) s.emotion_task = parse_task(doc["emotion_task"].get<std::string>());
    if (doc.contains("mode")) c.mode = parse_mode(doc["mode"].get<std::string>());
    if (doc.contains("plan")) {
      const auto p = doc["plan"].get<std::string>();
      if (p == "kfold") c.plan = PlanKind::kfold;
      else if (p == "loso") c.plan = PlanKind::loso;
      else throw FormatError("plan must be 'kfold' or 'loso'");
    }
    if (doc.contains("risk")) c.risk = risk_matrix_from_json(doc["risk"]);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("config: ") + e.what());
  }

  const auto& s = c.suite;
  if (!(s.data.window.window_s > 0) || !(s.data.window.stride_s > 0)) throw ValidationError("window_s and stride_s must be positive");
  if (s.data.chest_decimation < 1) throw ValidationError("chest_decimation must be >= 1");
  if (s.folds < 2) throw ValidationError("folds must be >= 2");
  if (s.jobs < 1) throw ValidationError("jobs must be >= 1");
  if (s.emotion_task == Task::identification) throw ValidationError("emotion_task cannot be identification");
  for (const auto& m : s.modalities) {
    if (!is_known_modality(m)) throw ValidationError("unknown modality '" + m + "'");
  }
  if (!is_known_modality(c.modality)) throw ValidationError("unknown modality '" + c.modality + "'");
  ResTcnConfig probe = s.model;
  probe.num_classes = 2;
  try {
    probe.validate();
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

}  // namespace sma
