#include "sma/signal.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "sma/error.hpp"

namespace sma {
namespace fs = std::filesystem;
using nlohmann::json;

bool is_known_modality(std::string_view name) {
  return std::find(kModalities.begin(), kModalities.end(), name) != kModalities.end();
}

bool is_chest(std::string_view name) { return name.starts_with("chest."); }

const Channel& Recording::channel(std::string_view name) const {
  for (const auto& c : channels) {
    if (c.name == name) return c;
  }
  throw LookupError("subject " + subject_id + " has no channel " + std::string(name));
}

bool Recording::has_channel(std::string_view name) const {
  return std::any_of(channels.begin(), channels.end(), [&](const Channel& c) { return c.name == name; });
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::identification: return "identification";
    case Task::emotion4: return "emotion4";
    case Task::stress_binary: return "stress_binary";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  if (text == "identification") return Task::identification;
  if (text == "emotion4" || text == "emotion") return Task::emotion4;
  if (text == "stress_binary" || text == "stress") return Task::stress_binary;
  throw ArgumentError("unknown task '" + std::string(text) + "'");
}

int class_count(Task task, int subject_count) {
  switch (task) {
    case Task::identification: return subject_count;
    case Task::emotion4: return 4;
    case Task::stress_binary: return 2;
  }
  return 0;
}

std::vector<std::string> WindowedDataset::subjects() const {
  std::set<std::string> s;
  for (const auto& w : windows) s.insert(w.subject_id);
  return {s.begin(), s.end()};
}

Recording load_recording(const fs::path& dir, std::span<const std::string> only) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("missing manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(detail::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError("unreadable manifest " + manifest_path.string() + ": " + e.what());
  }

  Recording rec;
  try {
    rec.subject_id = manifest.at("subject_id").get<std::string>();
    rec.label_rate = manifest.value("label_rate", kLabelRate);
    for (const auto& entry : manifest.at("channels")) {
      const auto name = entry.at("name").get<std::string>();
      if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
      Channel ch;
      ch.name = name;
      ch.sample_rate = entry.at("sample_rate").get<double>();
      const auto axes = entry.at("axes").get<std::size_t>();
      const auto count = entry.at("sample_count").get<std::size_t>();
      const auto file = entry.at("file").get<std::string>();
      if (!(ch.sample_rate > 0) || axes == 0) throw FormatError("channel " + name + ": bad rate or axes");
      const std::string bytes = detail::read_file(dir / file);
      if (bytes.size() != count * axes * sizeof(float)) {
        throw CorruptionError("channel " + name + ": file holds " + std::to_string(bytes.size()) +
                              " bytes, manifest implies " + std::to_string(count * axes * sizeof(float)));
      }
      auto flat = detail::decode_array<float>(bytes, count * axes);
      for (float v : flat) {
        if (!std::isfinite(v)) throw ValidationError("channel " + name + " contains NaN/Inf");
      }
      ch.axes.resize(axes);
      for (std::size_t a = 0; a < axes; ++a) {
        ch.axes[a].assign(flat.begin() + static_cast<std::ptrdiff_t>(a * count),
                          flat.begin() + static_cast<std::ptrdiff_t>((a + 1) * count));
      }
      rec.channels.push_back(std::move(ch));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  for (const auto& want : only) {
    if (!rec.has_channel(want)) throw LookupError("subject " + rec.subject_id + " has no channel " + want);
  }

  const fs::path labels_path = dir / "labels.i32";
  if (!fs::exists(labels_path)) throw FormatError("missing labels.i32 in " + dir.string());
  const std::string lbytes = detail::read_file(labels_path);
  if (lbytes.size() % sizeof(std::int32_t) != 0) throw CorruptionError("labels.i32 length not a multiple of 4");
  rec.labels = detail::decode_array<std::int32_t>(lbytes, lbytes.size() / sizeof(std::int32_t));
  for (auto l : rec.labels) {
    if (l < 0 || l > 7) throw ValidationError("label value " + std::to_string(l) + " outside 0..7");
  }
  for (const auto& ch : rec.channels) {
    if (!is_chest(ch.name)) continue;
    // Chest channels share the label clock; allow one channel sample of slack.
    const double expected = static_cast<double>(ch.length()) * rec.label_rate / ch.sample_rate;
    const double slack = std::max(1.0, rec.label_rate / ch.sample_rate);
    if (std::abs(expected - static_cast<double>(rec.labels.size())) > slack + 1e-9) {
      throw ValidationError("labels length " + std::to_string(rec.labels.size()) + " inconsistent with " + ch.name);
    }
  }
  return rec;
}

void save_recording(const Recording& rec, const fs::path& dir) {
  fs::create_directories(dir);
  json channels = json::array();
  for (const auto& ch : rec.channels) {
    const std::string file = ch.name + ".f32";
    std::string bytes;
    bytes.reserve(ch.length() * ch.axis_count() * sizeof(float));
    for (const auto& axis : ch.axes) {
      if (axis.size() != ch.length()) throw ArgumentError("channel " + ch.name + ": axes differ in length");
      for (float v : axis) detail::append_le(bytes, v);
    }
    detail::write_file(dir / file, bytes);
    channels.push_back({{"name", ch.name},
                        {"sample_rate", ch.sample_rate},
                        {"axes", ch.axis_count()},
                        {"sample_count", ch.length()},
                        {"file", file}});
  }
  std::string lbytes;
  lbytes.reserve(rec.labels.size() * 4);
  for (auto l : rec.labels) detail::append_le(lbytes, l);
  detail::write_file(dir / "labels.i32", lbytes);
  const json manifest = {{"subject_id", rec.subject_id}, {"label_rate", rec.label_rate}, {"channels", channels}};
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<fs::path> list_subjects(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("data root " + root.string() + " is not a directory");
  std::vector<fs::path> out;
  const fs::path index = root / "index.json";
  if (fs::exists(index)) {
    try {
      const auto doc = json::parse(detail::read_file(index));
      for (const auto& s : doc.at("subjects")) {
        const auto id = s.is_string() ? s.get<std::string>() : s.at("subject_id").get<std::string>();
        out.push_back(root / id);
      }
    } catch (const json::exception& e) {
      throw FormatError("malformed index.json: " + std::string(e.what()));
    }
    return out;
  }
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<int> map_labels(int raw, Task task, int subject_index) {
  if (raw < 0 || raw > 7) throw ArgumentError("raw label " + std::to_string(raw) + " outside 0..7");
  if (raw < 1 || raw > 4) return std::nullopt;
  switch (task) {
    case Task::emotion4: return raw - 1;
    case Task::stress_binary: return raw == 2 ? 1 : 0;
    case Task::identification: return subject_index;
  }
  return std::nullopt;
}

Channel decimate(const Channel& ch, std::size_t factor) {
  if (factor == 0) throw ArgumentError("decimate: factor must be >= 1");
  if (factor == 1) return ch;
  Channel out;
  out.name = ch.name;
  out.sample_rate = ch.sample_rate / static_cast<double>(factor);
  const std::size_t blocks = ch.length() / factor;
  out.axes.resize(ch.axis_count());
  for (std::size_t a = 0; a < ch.axis_count(); ++a) {
    auto& dst = out.axes[a];
    dst.resize(blocks);
    const auto& src = ch.axes[a];
    for (std::size_t b = 0; b < blocks; ++b) {
      double sum = 0;
      for (std::size_t j = 0; j < factor; ++j) sum += src[b * factor + j];
      dst[b] = static_cast<float>(sum / static_cast<double>(factor));
    }
  }
  return out;
}

namespace {

void standardize(std::span<float> v) {
  if (v.empty()) return;
  double mean = 0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0;
  for (float x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double denom = std::sqrt(var) + kStandardizeEps;
  for (auto& x : v) x = static_cast<float>((x - mean) / denom);
}

// Majority raw label over [lo, hi); ties go to the lower value.
std::optional<int> majority_label(std::span<const std::int32_t> labels) {
  if (labels.empty()) return std::nullopt;
  std::array<std::size_t, 8> counts{};
  for (auto l : labels) counts[static_cast<std::size_t>(l)]++;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

WindowedDataset make_windows(const Recording& rec, std::string_view modality, const WindowSpec& spec, Task task,
                             int subject_index) {
  if (!(spec.window_s > 0) || !(spec.stride_s > 0)) throw ArgumentError("window and stride must be positive");
  const Channel& ch = rec.channel(modality);
  const auto win = static_cast<std::size_t>(std::llround(spec.window_s * ch.sample_rate));
  const auto stride = static_cast<std::size_t>(std::llround(spec.stride_s * ch.sample_rate));
  if (win == 0 || stride == 0) throw ArgumentError("window or stride shorter than one sample");

  WindowedDataset ds;
  ds.modality = std::string(modality);
  ds.task = task;
  ds.num_classes = task == Task::identification ? subject_index + 1 : class_count(task);
  ds.axes = ch.axis_count();
  ds.window_length = win;

  const std::size_t len = ch.length();
  if (len < win) return ds;
  const double ratio = rec.label_rate / ch.sample_rate;
  for (std::size_t start = 0; start + win <= len; start += stride) {
    auto lo = static_cast<std::size_t>(std::floor(static_cast<double>(start) * ratio + 1e-9));
    auto hi = static_cast<std::size_t>(std::floor(static_cast<double>(start + win) * ratio + 1e-9));
    lo = std::min(lo, rec.labels.size());
    hi = std::min(hi, rec.labels.size());
    const auto raw = majority_label(std::span(rec.labels).subspan(lo, hi - lo));
    if (!raw) continue;
    const auto cls = map_labels(*raw, task, subject_index);
    if (!cls) continue;

    Window w;
    w.label = *cls;
    w.subject_id = rec.subject_id;
    w.t_start = static_cast<double>(start) / ch.sample_rate;
    w.values.resize(ch.axis_count() * win);
    for (std::size_t a = 0; a < ch.axis_count(); ++a) {
      auto dst = std::span(w.values).subspan(a * win, win);
      std::copy_n(ch.axes[a].begin() + static_cast<std::ptrdiff_t>(start), win, dst.begin());
      standardize(dst);
    }
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

namespace {

void append_dataset(WindowedDataset& into, WindowedDataset&& part) {
  if (into.windows.empty() && into.axes == 0) {
    into.axes = part.axes;
    into.window_length = part.window_length;
  } else if (!part.windows.empty() && (part.axes != into.axes || part.window_length != into.window_length)) {
    throw ShapeError("modality " + into.modality + " differs in shape across subjects");
  }
  for (auto& w : part.windows) into.windows.push_back(std::move(w));
}

Recording prepared(Recording rec, std::string_view modality, const DatasetOptions& options) {
  for (auto& ch : rec.channels) {
    if (ch.name == modality && is_chest(ch.name)) ch = decimate(ch, options.chest_decimation);
  }
  return rec;
}

}  // namespace

WindowedDataset build_dataset(std::span<const Recording> recordings, std::string_view modality, Task task,
                              const DatasetOptions& options) {
  WindowedDataset ds;
  ds.modality = std::string(modality);
  ds.task = task;
  ds.num_classes = class_count(task, static_cast<int>(recordings.size()));
  for (std::size_t s = 0; s < recordings.size(); ++s) {
    const auto rec = prepared(recordings[s], modality, options);
    append_dataset(ds, make_windows(rec, modality, options.window, task, static_cast<int>(s)));
  }
  return ds;
}

WindowedDataset build_dataset(std::span<const fs::path> subject_dirs, std::string_view modality, Task task,
                              const DatasetOptions& options) {
  WindowedDataset ds;
  ds.modality = std::string(modality);
  ds.task = task;
  ds.num_classes = class_count(task, static_cast<int>(subject_dirs.size()));
  const std::string wanted(modality);
  for (std::size_t s = 0; s < subject_dirs.size(); ++s) {
    auto rec = prepared(load_recording(subject_dirs[s], std::span(&wanted, 1)), modality, options);
    append_dataset(ds, make_windows(rec, modality, options.window, task, static_cast<int>(s)));
  }
  return ds;
}

}  // namespace sma
