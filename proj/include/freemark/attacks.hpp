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

#ifndef FREEMARK_ATTACKS_HPP
#define FREEMARK_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "freemark/error.hpp"
#include "freemark/extract.hpp"
#include "freemark/host_model.hpp"
#include "freemark/keygen.hpp"
#include "freemark/numeric.hpp"

namespace freemark {

// ---------------------------------------------------------------------------
// Magnitude pruning
// ---------------------------------------------------------------------------

struct PruneSpec {
  double eta = 0.0;
  std::optional<std::set<std::size_t>> layers;  // nullopt: every layer
};

struct PruneResult {
  ModelCheckpoint model;
  std::size_t zeroed = 0;
  std::size_t total = 0;

  double fraction_zeroed() const { return total ? static_cast<double>(zeroed) / static_cast<double>(total) : 0.0; }
};

/// Sets every in-scope weight with |w| < eta to zero. Biases are left alone.
inline PruneResult prune(const ModelCheckpoint& model, const PruneSpec& spec) {
  require(spec.eta >= 0.0, ErrorCode::kInvalidArgument, "pruning threshold must be >= 0");
  PruneResult out{model, 0, 0};
  auto& layers = out.model.mutable_layers();
  if (spec.layers)
    for (auto l : *spec.layers)
      require(l < layers.size(), ErrorCode::kInvalidLayer, "prune scope names layer " + std::to_string(l));
  for (std::size_t li = 0; li < layers.size(); ++li) {
    if (spec.layers && !spec.layers->contains(li)) continue;
    for (double& w : layers[li].weights.values()) {
      ++out.total;
      if (std::abs(w) < spec.eta) {
        w = 0.0;
        ++out.zeroed;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forged keys
// ---------------------------------------------------------------------------

struct ForgedKeySpec {
  std::size_t count = 200;
  std::uint64_t seed = 0;
  std::size_t bits = 512;
  std::size_t width = 32;
};

struct ForgedKey {
  Matrix a;
  RealVector d;
};

/// `count` pairs with every entry ~ N(0, 1), drawn in order from one stream.
inline std::vector<ForgedKey> forge_keys(const ForgedKeySpec& spec) {
  require(spec.count >= 1, ErrorCode::kInvalidArgument, "forged key count must be >= 1");
  Rng rng(spec.seed);
  std::vector<ForgedKey> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Matrix a = sample_gaussian_matrix(rng, spec.bits, spec.width);
    RealVector d = sample_gaussian_vector(rng, spec.width);
    out.push_back({std::move(a), std::move(d)});
  }
  return out;
}

struct BerSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::size_t> histogram;  // equal-width buckets over [0, 1]

  nlohmann::json to_json() const {
    return {{"count", count}, {"mean", mean}, {"stddev", stddev}, {"min", min}, {"max", max}, {"histogram", histogram}};
  }
};

inline BerSummary summarize(const std::vector<double>& bers, std::size_t buckets = 20) {
  require(!bers.empty(), ErrorCode::kEmptyInput, "summary of no BER values");
  BerSummary s;
  s.count = bers.size();
  s.mean = compensated_sum(bers) / static_cast<double>(bers.size());
  double sq = 0.0;
  for (double b : bers) sq += (b - s.mean) * (b - s.mean);
  s.stddev = bers.size() > 1 ? std::sqrt(sq / static_cast<double>(bers.size() - 1)) : 0.0;
  auto [lo, hi] = std::minmax_element(bers.begin(), bers.end());
  s.min = *lo;
  s.max = *hi;
  s.histogram.assign(buckets, 0);
  for (double b : bers) {
    auto i = static_cast<std::size_t>(b * static_cast<double>(buckets));
    ++s.histogram[std::min(i, buckets - 1)];
  }
  return s;
}

/// BER of every forged pair against `b`, extracting from `fhat` with the
/// given alpha (the genuine one unless the caller models a forger guessing).
inline std::vector<double> forged_bers(const std::vector<ForgedKey>& forged, double alpha, const RealVector& fhat,
                                       const WatermarkVector& b) {
  std::vector<double> out;
  out.reserve(forged.size());
  for (const auto& key : forged) out.push_back(ber(b.bits(), extract_bits(key.a, key.d, alpha, fhat)));
  return out;
}

// ---------------------------------------------------------------------------
// Independently trained (unmarked) models
// ---------------------------------------------------------------------------

struct TrainingSetup {
  DatasetSpec dataset;
  ModelSpec model;
  Hyper hyper;
};

/// Differences from the base setup. A hyperparameter variant changes some of
/// lr / epochs / seed on the same data; a data variant draws fresh samples of
/// the same task.
struct Variation {
  enum class Kind { kHyperparams, kData };
  Kind kind = Kind::kHyperparams;
  std::optional<double> lr;
  std::optional<std::uint32_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> sample_seed;

  std::string label() const { return kind == Kind::kHyperparams ? "hyperparams" : "data"; }
};

/// The k-th default hyperparameter variant: learning rate scaled by one of
/// {0.5, 0.75, 1.5, 2}, a few more epochs, and a fresh initialization seed.
inline Variation hyperparam_variation(const TrainingSetup& base, std::size_t k) {
  static constexpr double kLrScale[] = {0.5, 0.75, 1.5, 2.0};
  Variation v;
  v.kind = Variation::Kind::kHyperparams;
  v.lr = base.hyper.lr * kLrScale[k % 4];
  v.epochs = base.hyper.epochs + static_cast<std::uint32_t>(5 * (k % 3));
  v.seed = mix64(base.hyper.seed ^ (0x4859'0000ULL + k));
  return v;
}

/// The k-th default data variant: new samples of the same task, trained with
/// the base hyperparameters from an independent initialization.
inline Variation data_variation(const TrainingSetup& base, std::size_t k) {
  Variation v;
  v.kind = Variation::Kind::kData;
  v.sample_seed = mix64(base.dataset.seed ^ (0x4441'0000ULL + k));
  v.seed = mix64(base.hyper.seed ^ (0x4441'0000ULL + k));
  return v;
}

inline TrainResult train_unmarked_variant(const TrainingSetup& base, const Variation& variation) {
  TrainingSetup s = base;
  bool changed = false;
  auto apply = [&changed](auto& field, const auto& value) {
    if (value && *value != field) {
      field = *value;
      changed = true;
    }
  };
  apply(s.hyper.lr, variation.lr);
  apply(s.hyper.epochs, variation.epochs);
  apply(s.hyper.seed, variation.seed);
  if (variation.sample_seed && *variation.sample_seed != s.dataset.sample_seed.value_or(s.dataset.seed)) {
    s.dataset.sample_seed = variation.sample_seed;
    changed = true;
  }
  require(changed, ErrorCode::kInvalidArgument, "variation leaves the training setup unchanged");
  Dataset data = generate_synthetic_dataset(s.dataset);
  return train(s.model, data, s.hyper);
}

// ---------------------------------------------------------------------------
// Overwriting
// ---------------------------------------------------------------------------

struct EscrowedWatermark {
  SecretKeyPair keys;
  WatermarkVector watermark;
};

struct OverwriteReport {
  std::vector<double> bers;  // existing watermarks first, then the new ones
  Digest fingerprint_before{};
  Digest fingerprint_after{};
  std::vector<EscrowedWatermark> added;

  bool fingerprint_unchanged() const { return fingerprint_before == fingerprint_after; }
  bool all_pass() const {
    return fingerprint_unchanged() && std::all_of(bers.begin(), bers.end(), [](double b) { return b == 0.0; });
  }
};

/// Embeds every new watermark into the same model (new key generation runs,
/// seeds derived from cfg.seed), then re-extracts all old and new ones.
inline OverwriteReport overwrite_scenario(const ModelCheckpoint& model, const TriggerSet& trigger, std::size_t layer,
                                          const std::vector<EscrowedWatermark>& existing,
                                          const std::vector<WatermarkVector>& new_watermarks,
                                          const KeyGenConfig& cfg) {
  require(!existing.empty(), ErrorCode::kInvalidArgument, "overwrite scenario needs at least one existing key pair");
  OverwriteReport report;
  report.fingerprint_before = model.fingerprint();
  for (std::size_t i = 0; i < new_watermarks.size(); ++i) {
    KeyGenConfig c = cfg;
    c.seed = mix64(cfg.seed ^ (0x4f57'0000ULL + i));
    auto outcome = generate_keys(model, trigger, layer, new_watermarks[i], c);
    report.added.push_back({std::move(outcome.keys), new_watermarks[i]});
  }
  const std::vector<EscrowedWatermark>* groups[] = {&existing, &report.added};
  for (const auto* group : groups)
    for (const auto& item : *group) report.bers.push_back(ber(item.watermark.bits(), extract(model, trigger, item.keys)));
  report.fingerprint_after = model.fingerprint();
  return report;
}

// ---------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------

struct AttackRow {
  std::string attack;
  nlohmann::json params = nlohmann::json::object();
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  double ber = 0.0;
  Verdict verdict = Verdict::kNotCopy;

  nlohmann::json to_json() const {
    return {{"attack", attack},
            {"params", params},
            {"accuracy_before", accuracy_before},
            {"accuracy_after", accuracy_after},
            {"ber", ber},
            {"verdict", to_string(verdict)}};
  }
};

}  // namespace freemark

#endif  // FREEMARK_ATTACKS_HPP
