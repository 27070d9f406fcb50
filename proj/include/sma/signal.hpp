#pragma once

// Neutral-format recordings, label mapping and fixed-length windowing.
//
// On-disk layout of one subject directory:
//   manifest.json   {"subject_id", "label_rate", "channels": [{"name",
//                    "sample_rate", "axes", "sample_count", "file"}]}
//   <file>          little-endian float32, axis-major
//   labels.i32      little-endian int32 at label_rate (700 Hz)
// A data root holds one directory per subject plus an optional index.json
// ({"subjects": [...]}) naming the roster.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sma {

inline constexpr double kLabelRate = 700.0;
inline constexpr double kStandardizeEps = 1e-8;

/// Modalities in table order: chest first, then wrist.
inline constexpr std::array<std::string_view, 10> kModalities = {
    "chest.ACC", "chest.ECG", "chest.EDA", "chest.EMG", "chest.RESP",
    "chest.TEMP", "wrist.ACC", "wrist.BVP", "wrist.EDA", "wrist.TEMP"};

bool is_known_modality(std::string_view name);
bool is_chest(std::string_view name);

struct Channel {
  std::string name;
  double sample_rate = 0;
  /// One sequence per axis; all of equal length.
  std::vector<std::vector<float>> axes;

  std::size_t axis_count() const { return axes.size(); }
  std::size_t length() const { return axes.empty() ? 0 : axes.front().size(); }
};

struct Recording {
  std::string subject_id;
  std::vector<Channel> channels;
  std::vector<std::int32_t> labels;
  double label_rate = kLabelRate;

  /// Throws LookupError when absent.
  const Channel& channel(std::string_view name) const;
  bool has_channel(std::string_view name) const;
};

enum class Task { identification, emotion4, stress_binary };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);
/// Class count implied by the task; identification needs the roster size.
int class_count(Task task, int subject_count = 0);

struct Window {
  /// axes x length, axis-major, z-scored per axis.
  std::vector<float> values;
  int label = 0;
  std::string subject_id;
  double t_start = 0;
};

struct WindowedDataset {
  std::vector<Window> windows;
  int num_classes = 0;
  std::string modality;
  Task task = Task::emotion4;
  std::size_t axes = 0;
  std::size_t window_length = 0;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  std::vector<std::string> subjects() const;  // sorted, unique
};

struct WindowSpec {
  double window_s = 5.0;
  double stride_s = 2.5;
};

/// Reads a subject directory; `only` restricts which channels are read
/// (labels are always read). Empty `only` means every manifest channel.
Recording load_recording(const std::filesystem::path& dir, std::span<const std::string> only = {});

/// Writes `rec` in the neutral format, creating `dir` if needed.
void save_recording(const Recording& rec, const std::filesystem::path& dir);

/// Subject directories under a data root, in roster order.
std::vector<std::filesystem::path> list_subjects(const std::filesystem::path& root);

/// Raw WESAD label -> class index, or nullopt for discarded samples.
/// For identification the class is `subject_index`.
std::optional<int> map_labels(int raw, Task task, int subject_index = 0);

/// Block-mean downsampling; a trailing partial block is dropped.
Channel decimate(const Channel& ch, std::size_t factor);

WindowedDataset make_windows(const Recording& rec, std::string_view modality, const WindowSpec& spec, Task task,
                             int subject_index = 0);

struct DatasetOptions {
  WindowSpec window;
  std::size_t chest_decimation = 10;
};

/// Loads `modality` from every subject, decimates chest channels, windows
/// and pools. Identification classes are roster positions.
WindowedDataset build_dataset(std::span<const std::filesystem::path> subject_dirs, std::string_view modality,
                              Task task, const DatasetOptions& options);

/// Same, from recordings already in memory.
WindowedDataset build_dataset(std::span<const Recording> recordings, std::string_view modality, Task task,
                              const DatasetOptions& options);

}  // namespace sma
