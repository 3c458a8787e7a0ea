/* Copyright 2026 The FreeMark Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FREEMARK_HOST_MODEL_HPP
#define FREEMARK_HOST_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "freemark/binary_io.hpp"
#include "freemark/error.hpp"
#include "freemark/numeric.hpp"
#include "freemark/sha256.hpp"

namespace freemark {

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// Gaussian-blob classification task. Class centers are drawn from
/// N(0, center_scale^2) per coordinate using `seed`; sample noise comes from
/// `sample_seed` (defaults to `seed`). Changing only `sample_seed` yields
/// fresh data for the same task.
struct DatasetSpec {
  std::size_t num_classes = 4;
  std::size_t per_class = 250;
  std::size_t dim = 8;
  double noise = 0.5;
  double center_scale = 24.0;
  std::uint64_t seed = 7;
  std::optional<std::uint64_t> sample_seed;

  std::string id() const {
    std::ostringstream os;
    os.precision(17);
    os << "blobs(classes=" << num_classes << ",per_class=" << per_class << ",dim=" << dim
       << ",noise=" << noise << ",center_scale=" << center_scale << ",seed=" << seed
       << ",sample_seed=" << sample_seed.value_or(seed) << ")";
    return os.str();
  }
};

struct Dataset {
  Matrix features;  // one sample per row
  std::vector<std::uint32_t> labels;
  std::size_t num_classes = 0;
  std::string id;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

inline void validate_dataset(const Dataset& d) {
  require(d.features.rows() == d.labels.size(), ErrorCode::kDimensionMismatch,
          "dataset: feature rows != label count");
  require(d.num_classes >= 2, ErrorCode::kInvalidArgument, "dataset needs at least two classes");
  std::vector<std::size_t> counts(d.num_classes, 0);
  for (auto l : d.labels) {
    require(l < d.num_classes, ErrorCode::kInvalidArgument, "label out of range");
    ++counts[l];
  }
  for (std::size_t c = 0; c < counts.size(); ++c)
    require(counts[c] > 0, ErrorCode::kClassUnderpopulated, "class " + std::to_string(c) + " has no samples");
}

inline Dataset generate_synthetic_dataset(const DatasetSpec& spec) {
  require(spec.num_classes >= 2, ErrorCode::kInvalidArgument, "dataset spec: need at least 2 classes");
  require(spec.per_class >= 1, ErrorCode::kInvalidArgument, "dataset spec: per_class must be >= 1");
  require(spec.dim >= 1, ErrorCode::kInvalidArgument, "dataset spec: dim must be >= 1");
  require(spec.noise >= 0.0 && std::isfinite(spec.noise), ErrorCode::kInvalidArgument,
          "dataset: noise must be finite and >= 0");

  Rng task(spec.seed);
  Rng center_rng = task.split(0);
  Matrix centers = sample_gaussian_matrix(center_rng, spec.num_classes, spec.dim, spec.center_scale);
  Rng noise_rng = Rng(spec.sample_seed.value_or(spec.seed)).split(1);

  Dataset d;
  d.num_classes = spec.num_classes;
  d.id = spec.id();
  d.features = Matrix(spec.num_classes * spec.per_class, spec.dim);
  d.labels.reserve(spec.num_classes * spec.per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) d.features(row, j) = centers(c, j) + spec.noise * noise_rng.gaussian();
      d.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return d;
}

/// CSV loader for external data: a header line, then one sample per row with
/// numeric features followed by an integer label in the last column.
inline Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kFormat, path.string() + ": missing header line");
  std::vector<double> flat;
  std::vector<std::uint32_t> labels;
  std::size_t dim = 0, lineno = 1;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    auto where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() < 2) fail(ErrorCode::kFormat, where + ": need at least one feature and a label");
    if (dim == 0) dim = cells.size() - 1;
    if (cells.size() - 1 != dim) fail(ErrorCode::kFormat, where + ": inconsistent column count");
    try {
      for (std::size_t i = 0; i < dim; ++i) {
        std::size_t used = 0;
        flat.push_back(std::stod(cells[i], &used));
        if (used != cells[i].size()) throw std::invalid_argument(cells[i]);
      }
      std::size_t used = 0;
      long label = std::stol(cells.back(), &used);
      if (label < 0 || used != cells.back().size()) throw std::invalid_argument(cells.back());
      labels.push_back(static_cast<std::uint32_t>(label));
      max_label = std::max(max_label, labels.back());
    } catch (const std::logic_error&) {
      fail(ErrorCode::kFormat, where + ": malformed number");
    }
  }
  require(!labels.empty(), ErrorCode::kFormat, path.string() + ": no samples");
  Dataset d;
  d.features = Matrix(labels.size(), dim, std::move(flat));
  d.labels = std::move(labels);
  d.num_classes = max_label + 1;
  d.id = "csv(" + path.filename().string() + ")";
  validate_dataset(d);
  return d;
}

// ---------------------------------------------------------------------------
// Multilayer perceptron
// ---------------------------------------------------------------------------

enum class Activation : std::uint8_t { kLinear = 0, kRelu = 1 };

struct ModelSpec {
  std::size_t input_dim = 8;
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t num_classes = 4;
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::uint32_t epochs = 0;
  double lr = 0.0;
  std::uint32_t batch = 0;
  std::string dataset_id;
  std::string rng = Rng::kAlgorithmId;  // generator that produced the weights

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

/// Dense layer: out = act(W * in + b), W is out x in.
struct Layer {
  Matrix weights;
  RealVector bias;
  Activation activation = Activation::kRelu;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

class ModelCheckpoint {
 public:
  static constexpr std::string_view kMagic = "FMCK";
  static constexpr std::uint32_t kVersion = 1;

  ModelCheckpoint() = default;
  ModelCheckpoint(std::vector<Layer> layers, TrainingMeta meta) : layers_(std::move(layers)), meta_(std::move(meta)) {
    validate();
  }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  const TrainingMeta& meta() const { return meta_; }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t num_classes() const { return layers_.back().out_dim(); }

  /// Hidden layers are the valid activation-capture targets.
  bool is_hidden_layer(std::size_t l) const { return l + 1 < layers_.size(); }
  std::size_t width(std::size_t l) const { return layers_.at(l).out_dim(); }

  void validate() const {
    require(!layers_.empty(), ErrorCode::kInvalidArgument, "model has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& layer = layers_[i];
      require(layer.bias.size() == layer.out_dim(), ErrorCode::kDimensionMismatch,
              "layer " + std::to_string(i) + ": bias length != output width");
      if (i > 0)
        require(layer.in_dim() == layers_[i - 1].out_dim(), ErrorCode::kDimensionMismatch,
                "layer " + std::to_string(i) + ": input width does not chain");
    }
  }

  /// Post-activation output of every layer for one input.
  std::vector<RealVector> forward(std::span<const double> x) const {
    require(x.size() == input_dim(), ErrorCode::kDimensionMismatch, "forward: input width mismatch");
    std::vector<RealVector> outs;
    outs.reserve(layers_.size());
    std::span<const double> in = x;
    for (const auto& layer : layers_) {
      RealVector out(layer.out_dim());
      for (std::size_t r = 0; r < layer.out_dim(); ++r) {
        double z = layer.bias[r] + dot(layer.weights.row(r), in);
        out[r] = layer.activation == Activation::kRelu ? std::max(z, 0.0) : z;
      }
      outs.push_back(std::move(out));
      in = outs.back().values();
    }
    return outs;
  }

  std::uint32_t predict(std::span<const double> x) const {
    auto logits = forward(x).back();
    auto v = logits.values();
    return static_cast<std::uint32_t>(std::max_element(v.begin(), v.end()) - v.begin());
  }

  Bytes serialize() const {
    ByteWriter header;
    header.u64(input_dim());
    header.u64(layers_.size());
    for (const auto& layer : layers_) {
      header.u64(layer.out_dim());
      header.u8(static_cast<std::uint8_t>(layer.activation));
    }
    header.u64(meta_.seed);
    header.u32(meta_.epochs);
    header.f64(meta_.lr);
    header.u32(meta_.batch);
    header.str(meta_.dataset_id);
    header.str(meta_.rng);

    ByteWriter out;
    out.raw(kMagic);
    out.u32(kVersion);
    out.blob(header.bytes());
    for (const auto& layer : layers_) {
      write(out, layer.weights);
      write(out, layer.bias);
    }
    return std::move(out).take();
  }

  static ModelCheckpoint deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    in.expect(kMagic);
    if (auto v = in.u32(); v != kVersion) fail(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(v));
    ByteReader header(in.blob());
    auto input_dim = header.u64();
    auto n = header.u64();
    if (n == 0 || n > header.remaining() / 9) fail(ErrorCode::kFormat, "checkpoint: bad layer count");
    std::vector<std::pair<std::uint64_t, Activation>> shapes;
    for (std::uint64_t i = 0; i < n; ++i) {
      auto width = header.u64();
      auto act = header.u8();
      if (act > 1) fail(ErrorCode::kFormat, "checkpoint: unknown activation kind");
      shapes.emplace_back(width, static_cast<Activation>(act));
    }
    TrainingMeta meta;
    meta.seed = header.u64();
    meta.epochs = header.u32();
    meta.lr = header.f64();
    meta.batch = header.u32();
    meta.dataset_id = header.str();
    meta.rng = header.str();
    header.expect_done();

    std::vector<Layer> layers;
    auto prev = input_dim;
    for (const auto& [width, act] : shapes) {
      Layer layer{read_matrix(in), read_real_vector(in), act};
      if (layer.weights.rows() != width || layer.weights.cols() != prev)
        fail(ErrorCode::kFormat, "checkpoint: weight shape disagrees with header");
      prev = width;
      layers.push_back(std::move(layer));
    }
    in.expect_done();
    return ModelCheckpoint(std::move(layers), std::move(meta));
  }

  /// SHA-256 of the canonical serialization.
  Digest fingerprint() const { return sha256(serialize()); }

  void save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }
  static ModelCheckpoint load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;

 private:
  std::vector<Layer> layers_;
  TrainingMeta meta_;
};

inline double accuracy(const ModelCheckpoint& model, const Dataset& data) {
  require(data.size() > 0, ErrorCode::kEmptyInput, "accuracy on empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += model.predict(data.features.row(i)) == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct Hyper {
  std::uint32_t epochs = 30;
  double lr = 0.01;
  std::uint32_t batch = 32;
  std::uint64_t seed = 1;
};

struct TrainResult {
  ModelCheckpoint model;
  std::vector<double> epoch_accuracy;
  std::vector<double> epoch_loss;
};

/// Layer indices whose weights and biases stay fixed during fine-tuning.
struct FreezeSpec {
  std::set<std::size_t> frozen;
};

namespace detail {

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<RealVector> bias;

  explicit Gradients(const ModelCheckpoint& m) {
    for (const auto& layer : m.layers()) {
      weights.emplace_back(layer.out_dim(), layer.in_dim());
      bias.emplace_back(layer.out_dim());
    }
  }
  void zero() {
    for (auto& w : weights) std::fill(w.values().begin(), w.values().end(), 0.0);
    for (auto& b : bias) std::fill(b.values().begin(), b.values().end(), 0.0);
  }
};

/// Accumulates the softmax cross-entropy gradient of one sample and returns
/// its loss.
inline double backprop(const ModelCheckpoint& model, std::span<const double> x, std::uint32_t label, Gradients& g) {
  auto outs = model.forward(x);
  const auto& logits = outs.back();
  double max_logit = *std::max_element(logits.values().begin(), logits.values().end());
  std::vector<double> delta(logits.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) denom += std::exp(logits[k] - max_logit);
  for (std::size_t k = 0; k < logits.size(); ++k) delta[k] = std::exp(logits[k] - max_logit) / denom;
  double loss = -(logits[label] - max_logit - std::log(denom));
  delta[label] -= 1.0;

  const auto& layers = model.layers();
  for (std::size_t li = layers.size(); li-- > 0;) {
    std::span<const double> in = li == 0 ? x : outs[li - 1].values();
    auto& gw = g.weights[li];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      if (delta[r] == 0.0) continue;
      auto row = gw.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) row[c] += delta[r] * in[c];
      g.bias[li][r] += delta[r];
    }
    if (li == 0) break;
    std::vector<double> prev(in.size(), 0.0);
    const auto& w = layers[li].weights;
    for (std::size_t r = 0; r < delta.size(); ++r) {
      if (delta[r] == 0.0) continue;
      auto row = w.row(r);
      for (std::size_t c = 0; c < prev.size(); ++c) prev[c] += row[c] * delta[r];
    }
    if (layers[li - 1].activation == Activation::kRelu)
      for (std::size_t c = 0; c < prev.size(); ++c)
        if (outs[li - 1][c] <= 0.0) prev[c] = 0.0;
    delta = std::move(prev);
  }
  return loss;
}

inline void run_sgd(ModelCheckpoint& model, const Dataset& data, const Hyper& hyper,
                    const std::set<std::size_t>& frozen, TrainResult& result) {
  require(hyper.batch >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  require(hyper.lr >= 0.0 && std::isfinite(hyper.lr), ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  require(data.dim() == model.input_dim(), ErrorCode::kDimensionMismatch, "dataset width != model input width");
  require(data.num_classes <= model.num_classes(), ErrorCode::kDimensionMismatch, "dataset has more classes than model outputs");

  Rng shuffle_rng = Rng(hyper.seed).split(1);
  std::vector<std::size_t> order(data.size());
  Gradients g(model);
  for (std::uint32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      std::size_t end = std::min(order.size(), start + hyper.batch);
      g.zero();
      for (std::size_t k = start; k < end; ++k)
        epoch_loss += backprop(model, data.features.row(order[k]), data.labels[order[k]], g);
      if (!std::isfinite(epoch_loss))
        fail(ErrorCode::kTrainingDiverged, "loss became non-finite in epoch " + std::to_string(epoch + 1));
      double scale = hyper.lr / static_cast<double>(end - start);
      auto& layers = model.mutable_layers();
      for (std::size_t li = 0; li < layers.size(); ++li) {
        if (frozen.contains(li)) continue;
        auto w = layers[li].weights.values();
        auto gw = g.weights[li].values();
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= scale * gw[j];
        auto b = layers[li].bias.values();
        auto gb = g.bias[li].values();
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= scale * gb[j];
      }
    }
    for (const auto& layer : model.layers()) {
      for (double v : layer.weights.values())
        if (!std::isfinite(v)) fail(ErrorCode::kTrainingDiverged, "weights became non-finite");
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
    result.epoch_accuracy.push_back(accuracy(model, data));
  }
}

}  // namespace detail

/// He-normal initialization, minibatch SGD on softmax cross-entropy. Weight
/// init draws from split(0) of the seed, the shuffle order from split(1).
inline TrainResult train(const ModelSpec& spec, const Dataset& data, const Hyper& hyper) {
  require(hyper.epochs >= 1, ErrorCode::kInvalidArgument, "train: epochs must be >= 1");
  require(spec.input_dim >= 1 && spec.num_classes >= 2, ErrorCode::kInvalidArgument, "train: bad model spec");
  validate_dataset(data);

  Rng init_rng = Rng(hyper.seed).split(0);
  std::vector<Layer> layers;
  std::size_t in = spec.input_dim;
  std::vector<std::size_t> widths = spec.hidden;
  widths.push_back(spec.num_classes);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    require(widths[i] >= 1, ErrorCode::kInvalidArgument, "train: zero-width layer");
    double stddev = std::sqrt(2.0 / static_cast<double>(in));
    layers.push_back(Layer{sample_gaussian_matrix(init_rng, widths[i], in, stddev), RealVector(widths[i]),
                           i + 1 == widths.size() ? Activation::kLinear : Activation::kRelu});
    in = widths[i];
  }
  TrainingMeta meta{hyper.seed, hyper.epochs, hyper.lr, hyper.batch, data.id};
  TrainResult result{ModelCheckpoint(std::move(layers), std::move(meta)), {}, {}};
  detail::run_sgd(result.model, data, hyper, {}, result);
  return result;
}

/// Continues SGD on every layer not named in `freeze`. Training metadata is
/// carried over unchanged.
inline TrainResult fine_tune(const ModelCheckpoint& model, const Dataset& data, const Hyper& hyper,
                             const FreezeSpec& freeze) {
  require(hyper.epochs >= 1, ErrorCode::kInvalidArgument, "fine_tune: epochs must be >= 1");
  for (auto l : freeze.frozen)
    require(l < model.num_layers(), ErrorCode::kInvalidLayer, "fine_tune: frozen layer " + std::to_string(l) + " out of range");
  if (freeze.frozen.size() == model.num_layers()) fail(ErrorCode::kNothingToTrain, "every layer is frozen");
  validate_dataset(data);
  TrainResult result{model, {}, {}};
  detail::run_sgd(result.model, data, hyper, freeze.frozen, result);
  return result;
}

// ---------------------------------------------------------------------------
// Trigger sets and activations
// ---------------------------------------------------------------------------

struct TriggerSet {
  std::vector<std::size_t> indices;
  std::vector<std::uint32_t> labels;
  Matrix features;
  Digest digest{};

  std::size_t size() const { return features.rows(); }

  static Digest digest_of(const Matrix& features) { return sha256(serialize(features)); }

  friend bool operator==(const TriggerSet&, const TriggerSet&) = default;
};

inline TriggerSet make_trigger_set(const Dataset& data, std::vector<std::size_t> indices) {
  TriggerSet t;
  t.features = Matrix(indices.size(), data.dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < data.size(), ErrorCode::kInvalidArgument, "trigger index out of range");
    auto src = data.features.row(indices[i]);
    std::copy(src.begin(), src.end(), t.features.row(i).begin());
    t.labels.push_back(data.labels[indices[i]]);
  }
  t.indices = std::move(indices);
  t.digest = TriggerSet::digest_of(t.features);
  return t;
}

/// Picks exactly `per_class` samples of every label without replacement.
inline TriggerSet select_trigger_set(const Dataset& data, std::size_t per_class, Rng& rng) {
  require(per_class >= 1, ErrorCode::kInvalidArgument, "trigger set needs per_class >= 1");
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class.at(data.labels[i]).push_back(i);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& pool = by_class[c];
    if (pool.size() < per_class)
      fail(ErrorCode::kClassUnderpopulated, "class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                                                " samples, trigger set wants " + std::to_string(per_class));
    for (std::size_t k = 0; k < per_class; ++k) std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  return make_trigger_set(data, std::move(chosen));
}

struct ActivationVector {
  std::size_t layer = 0;
  RealVector values;

  std::size_t size() const { return values.size(); }
};

/// Elementwise mean of layer `layer`'s post-activation output over the
/// trigger set. Each coordinate is summed in sorted order with compensation,
/// so the result does not depend on trigger-sample order.
inline ActivationVector mean_activation(const ModelCheckpoint& model, const TriggerSet& trigger, std::size_t layer) {
  if (!model.is_hidden_layer(layer))
    fail(ErrorCode::kInvalidLayer, "layer " + std::to_string(layer) + " is not a hidden layer (model has " +
                                       std::to_string(model.num_layers() - 1) + ")");
  require(trigger.size() > 0, ErrorCode::kEmptyInput, "empty trigger set");
  std::size_t width = model.width(layer);
  Matrix per_sample(trigger.size(), width);
  for (std::size_t i = 0; i < trigger.size(); ++i) {
    auto outs = model.forward(trigger.features.row(i));
    std::copy(outs[layer].values().begin(), outs[layer].values().end(), per_sample.row(i).begin());
  }
  ActivationVector out{layer, RealVector(width)};
  std::vector<double> column(trigger.size());
  for (std::size_t j = 0; j < width; ++j) {
    for (std::size_t i = 0; i < trigger.size(); ++i) column[i] = per_sample(i, j);
    std::sort(column.begin(), column.end());
    out.values[j] = compensated_sum(column) / static_cast<double>(trigger.size());
  }
  return out;
}

inline void write(ByteWriter& out, const TriggerSet& t) {
  out.u64(t.indices.size());
  for (auto i : t.indices) out.u64(i);
  for (auto l : t.labels) out.u32(l);
  write(out, t.features);
  out.raw(t.digest);
}

inline TriggerSet read_trigger_set(ByteReader& in) {
  TriggerSet t;
  auto n = in.checked_len(in.u64());
  for (std::size_t i = 0; i < n; ++i) t.indices.push_back(static_cast<std::size_t>(in.u64()));
  for (std::size_t i = 0; i < n; ++i) t.labels.push_back(in.u32());
  t.features = read_matrix(in);
  auto d = in.raw(32);
  std::copy(d.begin(), d.end(), t.digest.begin());
  if (t.features.rows() != n) fail(ErrorCode::kFormat, "trigger set: feature rows != index count");
  if (TriggerSet::digest_of(t.features) != t.digest)
    fail(ErrorCode::kIntegrityViolation, "trigger set digest does not match its features");
  return t;
}

}  // namespace freemark

#endif  // FREEMARK_HOST_MODEL_HPP
