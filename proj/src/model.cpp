#include "sma/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "binary_io.hpp"
#include "sma/adam.hpp"
#include "sma/error.hpp"

namespace sma {
using nlohmann::json;

void ResTcnConfig::validate() const {
  auto check = [](const ConvSpec& s, const char* what) {
    if (s.kernel < 1 || s.channels < 1 || s.dilation < 1) {
      throw ArgumentError(std::string(what) + ": kernel, channels and dilation must be >= 1");
    }
  };
  if (in_channels < 1) throw ArgumentError("in_channels must be >= 1");
  check(stem, "stem");
  if (blocks.empty()) throw ArgumentError("at least one residual block is required");
  for (const auto& b : blocks) check(b, "block");
  if (num_classes < 2) throw ArgumentError("num_classes must be >= 2");
  if (!(lr > 0)) throw ArgumentError("lr must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
}

namespace {

json conv_json(const ConvSpec& s) {
  return {{"kernel", s.kernel}, {"channels", s.channels}, {"dilation", s.dilation}};
}

ConvSpec conv_from(const json& j) {
  return {j.at("kernel").get<std::size_t>(), j.at("channels").get<std::size_t>(), j.at("dilation").get<std::size_t>()};
}

json config_json(const ResTcnConfig& c) {
  json blocks = json::array();
  for (const auto& b : c.blocks) blocks.push_back(conv_json(b));
  return {{"in_channels", c.in_channels}, {"stem", conv_json(c.stem)}, {"blocks", blocks},
          {"num_classes", c.num_classes}, {"lr", c.lr},                 {"batch_size", c.batch_size},
          {"epochs", c.epochs},           {"seed", c.seed}};
}

ResTcnConfig config_from(const json& j) {
  ResTcnConfig c;
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.stem = conv_from(j.at("stem"));
  c.blocks.clear();
  for (const auto& b : j.at("blocks")) c.blocks.push_back(conv_from(b));
  c.num_classes = j.at("num_classes").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string to_canonical_json(const ResTcnConfig& config) { return config_json(config).dump(); }

ResTcnConfig config_from_json(std::string_view text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  }
}

template <typename Real>
struct BasicResTcn<Real>::Cache {
  struct BlockCache {
    Tensor3<Real> h1_pre, h1, sum;
  };
  Tensor3<Real> stem_pre;
  std::vector<Tensor3<Real>> block_in;  // input of each block; back() is the last block's output
  std::vector<BlockCache> blocks;
  Matrix<Real> pooled;
};

template <typename Real>
BasicResTcn<Real>::BasicResTcn(const ResTcnConfig& config) : config_(config) {
  config_.validate();
  layout();
  std::mt19937_64 rng(config_.seed);
  auto init = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (std::size_t j = 0; j < count; ++j) params_[offset + j] = static_cast<Real>(dist(rng));
  };
  auto init_slot = [&](const Slot& s) {
    init(s.weights, s.shape.weight_count(), s.shape.in_channels * s.shape.kernel);
  };
  init_slot(stem_);
  for (const auto& b : blocks_) {
    init_slot(b.conv1);
    init_slot(b.conv2);
    if (b.skip) init_slot(*b.skip);
  }
  init(head_weights_, head_.weight_count(), head_.in_features);
}

template <typename Real>
BasicResTcn<Real>::BasicResTcn(const ResTcnConfig& config, std::vector<Real> parameters) : config_(config) {
  config_.validate();
  layout();
  if (parameters.size() != params_.size()) {
    throw ShapeError("parameter buffer holds " + std::to_string(parameters.size()) + " values, config needs " +
                     std::to_string(params_.size()));
  }
  params_ = std::move(parameters);
}

template <typename Real>
void BasicResTcn<Real>::layout() {
  std::size_t offset = 0;
  auto slot = [&](ConvShape shape) {
    Slot s{shape, offset, offset + shape.weight_count()};
    offset = s.bias + shape.out_channels;
    return s;
  };
  const auto& c = config_;
  stem_ = slot({c.in_channels, c.stem.channels, c.stem.kernel, c.stem.dilation});
  std::size_t channels = c.stem.channels;
  blocks_.clear();
  for (const auto& spec : c.blocks) {
    Block b;
    b.conv1 = slot({channels, spec.channels, spec.kernel, spec.dilation});
    b.conv2 = slot({spec.channels, spec.channels, spec.kernel, spec.dilation});
    if (channels != spec.channels) b.skip = slot({channels, spec.channels, 1, 1});
    blocks_.push_back(b);
    channels = spec.channels;
  }
  head_ = {channels, static_cast<std::size_t>(c.num_classes)};
  head_weights_ = offset;
  head_bias_ = offset + head_.weight_count();
  offset = head_bias_ + head_.out_features;
  params_.assign(offset, Real(0));
}

template <typename Real>
std::size_t BasicResTcn<Real>::receptive_field() const {
  std::size_t rf = stem_.shape.receptive_field();
  for (const auto& b : blocks_) rf += (b.conv1.shape.receptive_field() - 1) + (b.conv2.shape.receptive_field() - 1);
  return rf;
}

template <typename Real>
ConvView<Real> BasicResTcn<Real>::view(const Slot& s) const {
  return {s.shape, std::span<const Real>(params_).subspan(s.weights, s.shape.weight_count()),
          std::span<const Real>(params_).subspan(s.bias, s.shape.out_channels)};
}

template <typename Real>
DenseView<Real> BasicResTcn<Real>::head_view() const {
  return {head_, std::span<const Real>(params_).subspan(head_weights_, head_.weight_count()),
          std::span<const Real>(params_).subspan(head_bias_, head_.out_features)};
}

namespace {

template <typename Real>
void add_into(Tensor3<Real>& a, const Tensor3<Real>& b) {
  auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t j = 0; j < ad.size(); ++j) ad[j] += bd[j];
}

template <typename Real>
void copy_into(std::span<Real> dst, std::size_t offset, const std::vector<Real>& src) {
  std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
}

}  // namespace

template <typename Real>
Matrix<Real> BasicResTcn<Real>::forward(const Tensor3<Real>& x, Cache* cache) const {
  if (x.channels() != config_.in_channels) {
    throw ShapeError("model expects " + std::to_string(config_.in_channels) + " input channels, got " +
                     std::to_string(x.channels()));
  }
  if (x.time() == 0) throw ShapeError("model input has an empty time axis");
  Tensor3<Real> stem_pre = causal_conv1d(x, view(stem_));
  Tensor3<Real> h = relu(stem_pre);
  if (cache) {
    cache->stem_pre = std::move(stem_pre);
    cache->block_in.clear();
    cache->blocks.clear();
  }
  for (const auto& b : blocks_) {
    Tensor3<Real> h1_pre = causal_conv1d(h, view(b.conv1));
    Tensor3<Real> h1 = relu(h1_pre);
    Tensor3<Real> sum = causal_conv1d(h1, view(b.conv2));
    if (b.skip) {
      add_into(sum, causal_conv1d(h, view(*b.skip)));
    } else {
      add_into(sum, h);
    }
    Tensor3<Real> out = relu(sum);
    if (cache) {
      cache->block_in.push_back(std::move(h));
      cache->blocks.push_back({std::move(h1_pre), std::move(h1), std::move(sum)});
    }
    h = std::move(out);
  }
  Matrix<Real> pooled = global_avg_pool(h);
  Matrix<Real> logits = dense(pooled, head_view());
  if (cache) {
    cache->block_in.push_back(std::move(h));
    cache->pooled = std::move(pooled);
  }
  return logits;
}

template <typename Real>
Tensor3<Real> BasicResTcn<Real>::features(const Tensor3<Real>& x) const {
  Cache cache;
  forward(x, &cache);
  return std::move(cache.block_in.back());
}

template <typename Real>
Matrix<Real> BasicResTcn<Real>::logits(const Tensor3<Real>& x) const {
  return forward(x, nullptr);
}

template <typename Real>
Real BasicResTcn<Real>::loss_and_gradient(const Tensor3<Real>& x, std::span<const int> labels,
                                          std::span<Real> grad) const {
  if (grad.size() != params_.size()) throw ShapeError("gradient buffer does not match parameter count");
  Cache cache;
  const Matrix<Real> z = forward(x, &cache);
  auto [loss, gz] = softmax_xent(z, labels);

  std::fill(grad.begin(), grad.end(), Real(0));
  auto head = dense_backward(cache.pooled, head_view(), gz);
  copy_into(grad, head_weights_, head.weights);
  copy_into(grad, head_bias_, head.bias);
  Tensor3<Real> g = global_avg_pool_backward(head.input, x.time());

  for (std::size_t i = blocks_.size(); i-- > 0;) {
    const auto& b = blocks_[i];
    const auto& bc = cache.blocks[i];
    const auto& in = cache.block_in[i];
    Tensor3<Real> gsum = relu_backward(bc.sum, g);
    auto c2 = causal_conv1d_backward(bc.h1, view(b.conv2), gsum);
    copy_into(grad, b.conv2.weights, c2.weights);
    copy_into(grad, b.conv2.bias, c2.bias);
    Tensor3<Real> gh1 = relu_backward(bc.h1_pre, c2.input);
    auto c1 = causal_conv1d_backward(in, view(b.conv1), gh1);
    copy_into(grad, b.conv1.weights, c1.weights);
    copy_into(grad, b.conv1.bias, c1.bias);
    g = std::move(c1.input);
    if (b.skip) {
      auto sk = causal_conv1d_backward(in, view(*b.skip), gsum);
      copy_into(grad, b.skip->weights, sk.weights);
      copy_into(grad, b.skip->bias, sk.bias);
      add_into(g, sk.input);
    } else {
      add_into(g, gsum);
    }
  }
  Tensor3<Real> gstem = relu_backward(cache.stem_pre, g);
  auto st = causal_conv1d_backward(x, view(stem_), gstem);
  copy_into(grad, stem_.weights, st.weights);
  copy_into(grad, stem_.bias, st.bias);
  return loss;
}

template <typename Real>
Tensor3<Real> stack_windows(const WindowedDataset& ds, std::span<const std::size_t> indices) {
  Tensor3<Real> x(indices.size(), ds.axes, ds.window_length);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const auto& w = ds.windows.at(indices[n]);
    if (w.values.size() != ds.axes * ds.window_length) throw ShapeError("window size does not match dataset shape");
    for (std::size_t a = 0; a < ds.axes; ++a) {
      auto dst = x.row(n, a);
      for (std::size_t t = 0; t < ds.window_length; ++t) dst[t] = static_cast<Real>(w.values[a * ds.window_length + t]);
    }
  }
  return x;
}

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

template <typename Real>
TrainResult train(BasicResTcn<Real>& model, const WindowedDataset& ds, std::span<const std::size_t> indices,
                  std::uint64_t seed) {
  const auto& cfg = model.config();
  if (ds.num_classes != cfg.num_classes) {
    throw ArgumentError("dataset has " + std::to_string(ds.num_classes) + " classes, model expects " +
                        std::to_string(cfg.num_classes));
  }
  if (ds.axes != cfg.in_channels) throw ArgumentError("dataset axes do not match model input channels");
  std::vector<std::size_t> order = indices.empty() ? all_indices(ds.size())
                                                   : std::vector<std::size_t>(indices.begin(), indices.end());
  if (order.empty()) throw ArgumentError("cannot train on an empty dataset");
  if (model.receptive_field() > ds.window_length) {
    std::cerr << "warning: receptive field " << model.receptive_field() << " exceeds window length "
              << ds.window_length << "\n";
  }

  TrainResult result;
  if (cfg.epochs == 0) return result;
  std::mt19937_64 rng(seed);
  auto state = AdamState<Real>::fresh(model.parameter_count(), cfg.lr);
  std::vector<Real> grad(model.parameter_count());
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto batch = std::span(order).subspan(start, std::min(cfg.batch_size, order.size() - start));
      const auto x = stack_windows<Real>(ds, batch);
      labels.clear();
      for (auto i : batch) labels.push_back(ds.windows[i].label);
      const Real loss = model.loss_and_gradient(x, labels, grad);
      total += static_cast<double>(loss) * static_cast<double>(batch.size());
      adam_step<Real>(model.parameters(), grad, state);
    }
    result.loss_curve.push_back(total / static_cast<double>(order.size()));
  }
  model.meta.epochs_run += cfg.epochs;
  model.meta.final_loss = result.loss_curve.back();
  return result;
}

int argmax(std::span<const double> row) {
  if (row.empty()) throw ArgumentError("argmax of an empty row");
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

template <typename Real>
Prediction predict(const BasicResTcn<Real>& model, const Tensor3<Real>& x) {
  const Matrix<Real> z = model.logits(x);
  Matrix<double> zd(z.rows(), z.cols());
  std::copy(z.data().begin(), z.data().end(), zd.data().begin());
  Prediction p{{}, softmax(zd)};
  for (std::size_t n = 0; n < zd.rows(); ++n) p.classes.push_back(argmax(zd.row(n)));
  return p;
}

template <typename Real>
Prediction predict(const BasicResTcn<Real>& model, const WindowedDataset& ds, std::span<const std::size_t> indices) {
  const std::vector<std::size_t> ids = indices.empty() ? all_indices(ds.size())
                                                       : std::vector<std::size_t>(indices.begin(), indices.end());
  const std::size_t classes = static_cast<std::size_t>(model.config().num_classes);
  Prediction out{{}, Matrix<double>(ids.size(), classes)};
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < ids.size(); start += kChunk) {
    const auto chunk = std::span(ids).subspan(start, std::min(kChunk, ids.size() - start));
    auto part = predict(model, stack_windows<Real>(ds, chunk));
    out.classes.insert(out.classes.end(), part.classes.begin(), part.classes.end());
    for (std::size_t n = 0; n < chunk.size(); ++n) {
      std::copy(part.probabilities.row(n).begin(), part.probabilities.row(n).end(), out.probabilities.row(start + n).begin());
    }
  }
  return out;
}

std::string serialize(const ResTcnModel& model) {
  json doc = {{"config", config_json(model.config())},
              {"training", {{"epochs_run", model.meta.epochs_run}, {"final_loss", nullptr}}}};
  if (model.meta.final_loss) doc["training"]["final_loss"] = *model.meta.final_loss;
  const std::string text = doc.dump();
  std::string out = "RTCN";
  detail::append_le(out, kCheckpointVersion);
  detail::append_le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  detail::append_le(out, static_cast<std::uint64_t>(model.parameter_count()));
  for (float v : model.parameters()) detail::append_le(out, v);
  return out;
}

ResTcnModel deserialize(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RTCN") != 0) throw FormatError("not a checkpoint (bad magic)");
  std::size_t pos = 4;
  const auto version = detail::read_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto len = detail::read_le<std::uint32_t>(bytes, pos);
  if (pos + len > bytes.size()) throw CorruptionError("checkpoint truncated inside config");
  json doc;
  try {
    doc = json::parse(bytes.substr(pos, len));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint config unreadable: ") + e.what());
  }
  pos += len;
  const auto count = detail::read_le<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos != count * sizeof(float)) throw CorruptionError("checkpoint parameter block truncated");
  std::vector<float> params(count);
  for (auto& v : params) v = detail::read_le<float>(bytes, pos);
  try {
    ResTcnModel model(config_from(doc.at("config")), std::move(params));
    const auto& tr = doc.at("training");
    model.meta.epochs_run = tr.at("epochs_run").get<std::size_t>();
    if (!tr.at("final_loss").is_null()) model.meta.final_loss = tr.at("final_loss").get<double>();
    return model;
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint config malformed: ") + e.what());
  }
}

void save(const ResTcnModel& model, const std::filesystem::path& path) { detail::write_file(path, serialize(model)); }

ResTcnModel load(const std::filesystem::path& path) { return deserialize(detail::read_file(path)); }

template class BasicResTcn<float>;
template class BasicResTcn<double>;
template Tensor3<float> stack_windows(const WindowedDataset&, std::span<const std::size_t>);
template Tensor3<double> stack_windows(const WindowedDataset&, std::span<const std::size_t>);
template TrainResult train(BasicResTcn<float>&, const WindowedDataset&, std::span<const std::size_t>, std::uint64_t);
template TrainResult train(BasicResTcn<double>&, const WindowedDataset&, std::span<const std::size_t>, std::uint64_t);
template Prediction predict(const BasicResTcn<float>&, const Tensor3<float>&);
template Prediction predict(const BasicResTcn<double>&, const Tensor3<double>&);
template Prediction predict(const BasicResTcn<float>&, const WindowedDataset&, std::span<const std::size_t>);
template Prediction predict(const BasicResTcn<double>&, const WindowedDataset&, std::span<const std::size_t>);

}  // namespace sma
