#pragma once

// Residual temporal convolutional network classifier.
//
//   x -> causal conv (stem) -> ReLU
//     -> [causal conv -> ReLU -> causal conv, + skip, ReLU] x blocks
//     -> global average pool -> dense -> logits
//
// The skip path is the identity, or a 1x1 convolution when the block
// changes the channel count. All parameters live in one flat buffer in
// declaration order (stem, blocks in order with conv1, conv2, skip, head),
// each layer as weights then bias.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sma/layers.hpp"
#include "sma/signal.hpp"
#include "sma/tensor.hpp"

namespace sma {

struct ConvSpec {
  std::size_t kernel = 3;
  std::size_t channels = 32;
  std::size_t dilation = 1;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct ResTcnConfig {
  std::size_t in_channels = 1;
  ConvSpec stem{7, 32, 1};
  std::vector<ConvSpec> blocks{{3, 32, 1}, {3, 32, 2}, {3, 32, 4}};
  int num_classes = 4;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 42;

  /// Throws ArgumentError on a config the network cannot be built from.
  void validate() const;

  friend bool operator==(const ResTcnConfig&, const ResTcnConfig&) = default;
};

std::string to_canonical_json(const ResTcnConfig& config);
ResTcnConfig config_from_json(std::string_view text);

struct TrainingMeta {
  std::size_t epochs_run = 0;
  std::optional<double> final_loss;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

template <typename Real>
class BasicResTcn {
 public:
  /// He-normal weights (std sqrt(2/fan_in)) from config.seed; zero biases.
  explicit BasicResTcn(const ResTcnConfig& config);
  /// Adopts an existing parameter buffer; sizes must match the config.
  BasicResTcn(const ResTcnConfig& config, std::vector<Real> parameters);

  const ResTcnConfig& config() const { return config_; }
  std::span<Real> parameters() { return params_; }
  std::span<const Real> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  /// Past samples (current included) that influence one pre-pool output:
  /// 1 + sum over every convolution of (K-1)*d.
  std::size_t receptive_field() const;

  /// Activations of the last residual block, before pooling.
  Tensor3<Real> features(const Tensor3<Real>& x) const;
  Matrix<Real> logits(const Tensor3<Real>& x) const;

  /// Mean cross-entropy over the batch; writes d(loss)/d(parameters) into
  /// `grad` (overwritten, same layout as parameters()).
  Real loss_and_gradient(const Tensor3<Real>& x, std::span<const int> labels, std::span<Real> grad) const;

  TrainingMeta meta;

 private:
  struct Slot {
    ConvShape shape;
    std::size_t weights = 0;
    std::size_t bias = 0;
  };
  struct Block {
    Slot conv1, conv2;
    std::optional<Slot> skip;
  };
  struct Cache;

  void layout();
  ConvView<Real> view(const Slot& s) const;
  DenseView<Real> head_view() const;
  Matrix<Real> forward(const Tensor3<Real>& x, Cache* cache) const;

  ResTcnConfig config_;
  Slot stem_;
  std::vector<Block> blocks_;
  DenseShape head_;
  std::size_t head_weights_ = 0, head_bias_ = 0;
  std::vector<Real> params_;
};

using ResTcnModel = BasicResTcn<float>;

inline ResTcnModel build(const ResTcnConfig& config) { return ResTcnModel(config); }

/// Gathers windows into an (N, axes, T) batch.
template <typename Real>
Tensor3<Real> stack_windows(const WindowedDataset& ds, std::span<const std::size_t> indices);

struct TrainResult {
  std::vector<double> loss_curve;  // mean training loss per epoch
};

/// config.epochs passes of shuffled mini-batch Adam over `indices`
/// (all windows when empty). Shuffling is seeded by `seed`.
template <typename Real>
TrainResult train(BasicResTcn<Real>& model, const WindowedDataset& ds, std::span<const std::size_t> indices,
                  std::uint64_t seed);

template <typename Real>
TrainResult train(BasicResTcn<Real>& model, const WindowedDataset& ds, std::uint64_t seed) {
  return train(model, ds, {}, seed);
}

struct Prediction {
  std::vector<int> classes;    // argmax, ties to the lower index
  Matrix<double> probabilities;  // softmax rows
};

template <typename Real>
Prediction predict(const BasicResTcn<Real>& model, const Tensor3<Real>& x);

template <typename Real>
Prediction predict(const BasicResTcn<Real>& model, const WindowedDataset& ds, std::span<const std::size_t> indices);

/// Index of the row maximum; first index wins on ties.
int argmax(std::span<const double> row);

// Checkpoint: "RTCN", u32 version, u32 JSON length, canonical JSON
// ({"config", "training"}), u64 parameter count, float32 parameters.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize(const ResTcnModel& model);
ResTcnModel deserialize(const std::string& bytes);
void save(const ResTcnModel& model, const std::filesystem::path& path);
ResTcnModel load(const std::filesystem::path& path);

}  // namespace sma
