#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "sma/config.hpp"
#include "sma/error.hpp"
#include "sma/eval.hpp"
#include "sma/gradcheck.hpp"
#include "sma/layers.hpp"
#include "sma/metrics.hpp"
#include "sma/model.hpp"
#include "sma/report.hpp"
#include "sma/risk.hpp"
#include "sma/signal.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Array<T> vector_array(std::size_t n) {
  return Array<T>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(n)});
}

template <typename Real>
sma::Tensor3<Real> to_tensor(const Array<Real>& a) {
  if (a.ndim() != 3) throw sma::ShapeError("expected a 3-d array (batch, channels, time)");
  sma::Tensor3<Real> t(a.shape(0), a.shape(1), a.shape(2));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

template <typename Real>
Array<Real> from_tensor(const sma::Tensor3<Real>& t) {
  Array<Real> a({t.batch(), t.channels(), t.time()});
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

template <typename Real>
Array<Real> from_matrix(const sma::Matrix<Real>& m) {
  Array<Real> a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

sma::Config config_from(const std::string& text) {
  return sma::parse_config(text.empty() ? json::object() : json::parse(text));
}

sma::Task task_for(const sma::Config& c) {
  if (c.mode == sma::Mode::identification) return sma::Task::identification;
  return c.task == sma::Task::identification ? c.suite.emotion_task : c.task;
}

/// Arrays shaped (N, axes, T) plus integer labels become an in-memory dataset.
sma::WindowedDataset dataset_from(const Array<float>& x, const Array<int>& labels, int num_classes) {
  if (x.ndim() != 3) throw sma::ShapeError("expected windows shaped (batch, axes, time)");
  if (labels.ndim() != 1 || labels.shape(0) != x.shape(0)) throw sma::ShapeError("labels must be 1-d, one per window");
  sma::WindowedDataset ds;
  ds.num_classes = num_classes;
  ds.axes = x.shape(1);
  ds.window_length = x.shape(2);
  const std::size_t per = ds.axes * ds.window_length;
  for (py::ssize_t n = 0; n < x.shape(0); ++n) {
    sma::Window w;
    w.values.assign(x.data() + n * per, x.data() + (n + 1) * per);
    w.label = labels.data()[n];
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

py::tuple dataset_arrays(const sma::WindowedDataset& ds) {
  Array<float> x({ds.size(), ds.axes, ds.window_length});
  auto y = vector_array<int>(ds.size());
  py::list subjects;
  float* out = x.mutable_data();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out = std::copy(ds.windows[i].values.begin(), ds.windows[i].values.end(), out);
    y.mutable_data()[i] = ds.windows[i].label;
    subjects.append(ds.windows[i].subject_id);
  }
  return py::make_tuple(x, y, subjects, ds.num_classes);
}

class PyModel {
 public:
  explicit PyModel(sma::ResTcnModel m) : model_(std::move(m)) {}

  static PyModel create(const std::string& config_json) {
    return PyModel(sma::ResTcnModel(
        sma::config_from_json(config_json.empty() ? sma::to_canonical_json(sma::ResTcnConfig{}) : config_json)));
  }

  std::string config() const { return sma::to_canonical_json(model_.config()); }
  std::size_t parameter_count() const { return model_.parameter_count(); }
  std::size_t receptive_field() const { return model_.receptive_field(); }

  Array<float> parameters() const {
    auto a = vector_array<float>(model_.parameter_count());
    std::copy(model_.parameters().begin(), model_.parameters().end(), a.mutable_data());
    return a;
  }

  Array<float> logits(const Array<float>& x) const { return from_matrix(model_.logits(to_tensor(x))); }

  py::tuple predict(const Array<float>& x) const {
    const auto p = sma::predict(model_, to_tensor(x));
    return py::make_tuple(py::cast(p.classes), from_matrix(p.probabilities));
  }

  std::vector<double> fit(const Array<float>& x, const Array<int>& labels, std::uint64_t seed) {
    const auto ds = dataset_from(x, labels, model_.config().num_classes);
    py::gil_scoped_release release;
    return sma::train(model_, ds, seed).loss_curve;
  }

  void save(const std::filesystem::path& path) const { sma::save(model_, path); }
  static PyModel load(const std::filesystem::path& path) { return PyModel(sma::load(path)); }
  py::bytes to_bytes() const { return py::bytes(sma::serialize(model_)); }
  static PyModel from_bytes(const py::bytes& b) { return PyModel(sma::deserialize(std::string(b))); }

 private:
  sma::ResTcnModel model_;
};

}  // namespace

PYBIND11_MODULE(_sma, m) {
  m.doc() = "Res-TCN stress and affect pipeline";

  auto base = py::register_exception<sma::Error>(m, "SmaError", PyExc_RuntimeError);
  py::register_exception<sma::FormatError>(m, "FormatError", base);
  py::register_exception<sma::CorruptionError>(m, "CorruptionError", base);
  py::register_exception<sma::ValidationError>(m, "ValidationError", base);
  py::register_exception<sma::LookupError>(m, "NotFoundError", base);
  py::register_exception<sma::ArgumentError>(m, "ArgumentError", base);
  py::register_exception<sma::ShapeError>(m, "ShapeError", base);
  py::register_exception<sma::IoError>(m, "IoError", base);
  py::register_exception<sma::InvariantError>(m, "InvariantError", base);

  m.attr("MODALITIES") = [] {
    py::list l;
    for (auto name : sma::kModalities) l.append(std::string(name));
    return l;
  }();

  m.def("default_model_config", [] { return sma::to_canonical_json(sma::ResTcnConfig{}); });

  m.def(
      "causal_conv1d",
      [](const Array<double>& x, const Array<double>& weights, const Array<double>& bias, std::size_t dilation) {
        if (weights.ndim() != 3) throw sma::ShapeError("weights must be (out, in, kernel)");
        sma::ConvParams<double> p{{static_cast<std::size_t>(weights.shape(1)), static_cast<std::size_t>(weights.shape(0)),
                                   static_cast<std::size_t>(weights.shape(2)), dilation},
                                  {weights.data(), weights.data() + weights.size()},
                                  {bias.data(), bias.data() + bias.size()}};
        if (p.bias.size() != p.shape.out_channels) throw sma::ShapeError("bias length must equal out channels");
        return from_tensor(sma::causal_conv1d(to_tensor(x), p));
      },
      py::arg("x"), py::arg("weights"), py::arg("bias"), py::arg("dilation") = 1);

  m.def(
      "map_label", [](int raw, const std::string& task, int subject_index) {
        return sma::map_labels(raw, sma::parse_task(task), subject_index);
      },
      py::arg("raw"), py::arg("task"), py::arg("subject_index") = 0);

  m.def("list_subjects", &sma::list_subjects, py::arg("root"));

  m.def(
      "save_recording",
      [](const std::filesystem::path& dir, const std::string& subject_id, const py::dict& channels,
         const Array<std::int32_t>& labels, double label_rate) {
        sma::Recording rec;
        rec.subject_id = subject_id;
        rec.label_rate = label_rate;
        rec.labels.assign(labels.data(), labels.data() + labels.size());
        for (auto [key, value] : channels) {
          auto pair = value.cast<py::tuple>();
          sma::Channel ch;
          ch.name = key.cast<std::string>();
          ch.sample_rate = pair[0].cast<double>();
          auto data = pair[1].cast<Array<float>>();
          if (data.ndim() == 1) data = data.reshape({py::ssize_t{1}, data.shape(0)});
          if (data.ndim() != 2) throw sma::ShapeError("channel data must be (axes, samples) or (samples,)");
          for (py::ssize_t a = 0; a < data.shape(0); ++a) {
            ch.axes.emplace_back(data.data() + a * data.shape(1), data.data() + (a + 1) * data.shape(1));
          }
          rec.channels.push_back(std::move(ch));
        }
        sma::save_recording(rec, dir);
      },
      py::arg("dir"), py::arg("subject_id"), py::arg("channels"), py::arg("labels"), py::arg("label_rate") = sma::kLabelRate);

  m.def(
      "load_recording",
      [](const std::filesystem::path& dir) {
        const auto rec = sma::load_recording(dir);
        py::dict channels;
        for (const auto& ch : rec.channels) {
          Array<float> a({ch.axis_count(), ch.length()});
          for (std::size_t i = 0; i < ch.axis_count(); ++i) {
            std::copy(ch.axes[i].begin(), ch.axes[i].end(), a.mutable_data() + i * ch.length());
          }
          channels[py::str(ch.name)] = py::make_tuple(ch.sample_rate, a);
        }
        auto labels = vector_array<std::int32_t>(rec.labels.size());
        std::copy(rec.labels.begin(), rec.labels.end(), labels.mutable_data());
        py::dict out;
        out["subject_id"] = rec.subject_id;
        out["label_rate"] = rec.label_rate;
        out["channels"] = channels;
        out["labels"] = labels;
        return out;
      },
      py::arg("dir"));

  m.def(
      "build_dataset",
      [](const std::filesystem::path& root, const std::string& modality, const std::string& task,
         const std::string& config_json) {
        const auto c = config_from(config_json);
        const auto dirs = sma::list_subjects(root);
        return dataset_arrays(sma::build_dataset(dirs, modality, sma::parse_task(task), c.suite.data));
      },
      py::arg("root"), py::arg("modality"), py::arg("task"), py::arg("config_json") = "");

  m.def(
      "run_experiment",
      [](const std::filesystem::path& root, const std::string& config_json) {
        const auto c = config_from(config_json);
        const auto dirs = sma::list_subjects(root);
        const auto ds = sma::build_dataset(dirs, c.modality, task_for(c), c.suite.data);
        const auto kind = c.plan.value_or(c.mode == sma::Mode::generalized ? sma::PlanKind::loso : sma::PlanKind::kfold);
        const auto plan = kind == sma::PlanKind::loso ? sma::plan_loso(ds) : sma::plan_kfold(ds, c.suite.folds, c.suite.seed);
        sma::ResTcnConfig mc = c.suite.model;
        mc.seed = c.suite.seed;
        std::vector<std::string> subjects;
        for (const auto& d : dirs) subjects.push_back(d.filename().string());
        sma::RunReport report;
        {
          py::gil_scoped_release release;
          report = sma::run_experiment(ds, plan, mc, c.mode, c.suite.jobs);
        }
        return sma::report_document(subjects, {report}, c.suite).dump();
      },
      py::arg("root"), py::arg("config_json") = "");

  m.def(
      "run_suite",
      [](const std::filesystem::path& root, const std::string& config_json) {
        const auto c = config_from(config_json);
        sma::SuiteResult result;
        {
          py::gil_scoped_release release;
          result = sma::run_full_suite(root, c.suite);
        }
        return py::make_tuple(sma::report_document(result.subjects, result.reports, c.suite).dump(),
                              sma::render_table(result));
      },
      py::arg("root"), py::arg("config_json") = "");

  m.def(
      "confusion",
      [](const std::vector<int>& truth, const std::vector<int>& pred, std::size_t classes) {
        const auto cm = sma::confusion(truth, pred, classes);
        Array<std::int64_t> a({classes, classes});
        for (std::size_t i = 0; i < classes; ++i)
          for (std::size_t j = 0; j < classes; ++j) a.mutable_at(i, j) = static_cast<std::int64_t>(cm(i, j));
        return a;
      },
      py::arg("truth"), py::arg("pred"), py::arg("classes"));
  m.def(
      "scores",
      [](const std::vector<int>& truth, const std::vector<int>& pred, std::size_t classes) {
        const auto cm = sma::confusion(truth, pred, classes);
        py::dict out;
        out["accuracy"] = sma::accuracy(cm);
        out["macro_f1"] = sma::macro_f1(cm);
        py::list per_class;
        for (std::size_t c = 0; c < classes; ++c) {
          const auto s = sma::precision_recall_f1(cm, c);
          per_class.append(py::make_tuple(s.precision, s.recall, s.f1));
        }
        out["per_class"] = per_class;
        return out;
      },
      py::arg("truth"), py::arg("pred"), py::arg("classes"));

  m.def(
      "assess_risk",
      [](const std::string& impact, double accuracy, const std::string& config_json) {
        const auto c = config_from(config_json);
        return std::string(sma::to_string(sma::assess(sma::parse_risk_level(impact), accuracy, c.risk)));
      },
      py::arg("impact"), py::arg("accuracy"), py::arg("config_json") = "");

  m.def(
      "gradcheck",
      [](std::uint64_t seed) {
        const auto r = sma::run_gradcheck(seed);
        py::list entries;
        for (const auto& e : r.entries) entries.append(py::make_tuple(e.name, e.max_rel_error, e.tolerance, e.passed));
        return entries;
      },
      py::arg("seed") = 42);

  py::class_<PyModel>(m, "ResTcn")
      .def(py::init(&PyModel::create), py::arg("config_json") = "")
      .def_property_readonly("config_json", &PyModel::config)
      .def_property_readonly("parameter_count", &PyModel::parameter_count)
      .def_property_readonly("receptive_field", &PyModel::receptive_field)
      .def("parameters", &PyModel::parameters)
      .def("logits", &PyModel::logits, py::arg("x"))
      .def("predict", &PyModel::predict, py::arg("x"))
      .def("fit", &PyModel::fit, py::arg("x"), py::arg("labels"), py::arg("seed") = 42)
      .def("save", &PyModel::save, py::arg("path"))
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("to_bytes", &PyModel::to_bytes)
      .def_static("from_bytes", &PyModel::from_bytes, py::arg("data"));
}
