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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "freemark/host_model.hpp"
#include "support.hpp"

namespace freemark {
namespace {

// Per-sample forward pass written out with plain loops, then a straight
// average over the trigger set.
std::vector<double> oracle_mean_activation(const ModelCheckpoint& model, const TriggerSet& trigger,
                                           std::size_t layer) {
  const auto& layers = model.layers();
  std::vector<double> sum(layers[layer].weights.rows(), 0.0);
  for (std::size_t s = 0; s < trigger.features.rows(); ++s) {
    std::vector<double> x(trigger.features.row(s).begin(), trigger.features.row(s).end());
    for (std::size_t l = 0; l <= layer; ++l) {
      const auto& w = layers[l].weights;
      std::vector<double> y(w.rows());
      for (std::size_t i = 0; i < w.rows(); ++i) {
        double acc = layers[l].bias[i];
        for (std::size_t j = 0; j < w.cols(); ++j) acc += w(i, j) * x[j];
        y[i] = acc > 0.0 ? acc : 0.0;
      }
      x = y;
    }
    for (std::size_t i = 0; i < x.size(); ++i) sum[i] += x[i];
  }
  for (double& v : sum) v /= static_cast<double>(trigger.features.rows());
  return sum;
}

TEST(Dataset, SyntheticIsDeterministicAndBalanced) {
  DatasetSpec spec;
  auto a = generate_synthetic_dataset(spec);
  auto b = generate_synthetic_dataset(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.size(), 1000u);
  EXPECT_EQ(a.dim(), 8u);
  for (std::uint32_t c = 0; c < 4; ++c) EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), c), 250);
}

TEST(Dataset, SampleSeedKeepsTaskChangesSamples) {
  DatasetSpec base;
  DatasetSpec other = base;
  other.sample_seed = 99;
  auto a = generate_synthetic_dataset(base);
  auto b = generate_synthetic_dataset(other);
  EXPECT_NE(a.features, b.features);
  EXPECT_NE(a.id, b.id);
  // Same centers: per-class means agree to within a few noise standard errors.
  for (std::uint32_t c = 0; c < 4; ++c)
    for (std::size_t j = 0; j < a.dim(); ++j) {
      double ma = 0, mb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.labels[i] == c) ma += a.features(i, j) / 250.0;
        if (b.labels[i] == c) mb += b.features(i, j) / 250.0;
      }
      EXPECT_NEAR(ma, mb, 0.25);
    }
}

TEST(Dataset, CsvLoader) {
  testing::TempDir dir("csv");
  {
    std::ofstream out(dir / "d.csv");
    out << "x0,x1,label\n0.5,1.5,0\n-1,2,1\n3,4,1\n";
  }
  auto d = load_dataset_csv(dir / "d.csv");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.num_classes, 2u);
  EXPECT_EQ(d.features(1, 0), -1.0);
  EXPECT_EQ(d.labels[2], 1u);
  {
    std::ofstream out(dir / "bad.csv");
    out << "x0,label\n1,0\nfoo,1\n";
  }
  try {
    (void)load_dataset_csv(dir / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos);
  }
}

TEST(Training, ReachesHighAccuracyOnDefaultTask) {
  const auto& host = testing::default_host();
  EXPECT_GE(host.accuracy, 0.95);
  EXPECT_EQ(host.model().num_layers(), 3u);
  EXPECT_EQ(host.model().width(1), 32u);
  EXPECT_FALSE(host.model().is_hidden_layer(2));
}

TEST(Training, ReplayIsByteIdentical) {
  auto s = testing::default_setup();
  auto data = generate_synthetic_dataset(s.training.dataset);
  auto a = train(s.training.model, data, s.training.hyper);
  auto b = train(s.training.model, data, s.training.hyper);
  EXPECT_EQ(a.model.serialize(), b.model.serialize());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  s.training.hyper.seed += 1;
  auto c = train(s.training.model, data, s.training.hyper);
  EXPECT_NE(a.model.fingerprint(), c.model.fingerprint());
}

TEST(Training, DivergenceIsReported) {
  auto s = testing::default_setup();
  auto data = generate_synthetic_dataset(s.training.dataset);
  s.training.hyper.lr = 1e10;
  try {
    (void)train(s.training.model, data, s.training.hyper);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrainingDiverged);
  }
}

TEST(Training, RejectsZeroEpochs) {
  auto s = testing::default_setup();
  auto data = generate_synthetic_dataset(s.training.dataset);
  s.training.hyper.epochs = 0;
  EXPECT_THROW((void)train(s.training.model, data, s.training.hyper), Error);
}

TEST(Checkpoint, RoundTripAndFingerprint) {
  const auto& model = testing::default_host().model();
  auto bytes = model.serialize();
  auto back = ModelCheckpoint::deserialize(bytes);
  EXPECT_EQ(back.serialize(), bytes);
  EXPECT_EQ(back.fingerprint(), model.fingerprint());
  EXPECT_EQ(back.meta(), model.meta());
  EXPECT_EQ(back.meta().rng, "mt19937_64+boxmuller/1");
  testing::TempDir dir("ckpt");
  model.save(dir / "m.fmck");
  EXPECT_EQ(ModelCheckpoint::load(dir / "m.fmck").fingerprint(), model.fingerprint());
}

TEST(Checkpoint, RejectsCorruptBytes) {
  auto bytes = testing::default_host().model().serialize();
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW((void)ModelCheckpoint::deserialize(truncated), Error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW((void)ModelCheckpoint::deserialize(bad_magic), Error);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW((void)ModelCheckpoint::deserialize(trailing), Error);
}

TEST(FineTune, FrozenLayerIsUntouchedAndMetaKept) {
  const auto& host = testing::default_host();
  Hyper h;
  h.epochs = 2;
  h.seed = 5;
  auto tuned = fine_tune(host.model(), host.data, h, {{0}});
  EXPECT_EQ(tuned.model.layers()[0], host.model().layers()[0]);
  EXPECT_NE(tuned.model.layers()[1], host.model().layers()[1]);
  EXPECT_EQ(tuned.model.meta(), host.model().meta());
}

TEST(FineTune, AllFrozenIsAnError) {
  const auto& host = testing::default_host();
  try {
    (void)fine_tune(host.model(), host.data, Hyper{}, {{0, 1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNothingToTrain);
  }
}

TEST(TriggerSet, PerClassSelectionAndDigest) {
  const auto& host = testing::default_host();
  const auto& t = host.trigger;
  EXPECT_EQ(t.size(), 40u);
  for (std::uint32_t c = 0; c < 4; ++c) EXPECT_EQ(std::count(t.labels.begin(), t.labels.end(), c), 10);
  EXPECT_TRUE(std::is_sorted(t.indices.begin(), t.indices.end()));
  EXPECT_EQ(t.digest, TriggerSet::digest_of(t.features));
  Rng rng(1);
  EXPECT_THROW((void)select_trigger_set(host.data, 251, rng), Error);
}

TEST(TriggerSet, SerializationVerifiesDigest) {
  const auto& t = testing::default_host().trigger;
  ByteWriter w;
  write(w, t);
  auto bytes = w.bytes();
  ByteReader in(bytes);
  auto back = read_trigger_set(in);
  EXPECT_EQ(back.digest, t.digest);
  EXPECT_EQ(back.indices, t.indices);
  bytes[bytes.size() / 2] ^= 0x01;
  ByteReader bad(bytes);
  EXPECT_THROW((void)read_trigger_set(bad), Error);
}

TEST(MeanActivation, MatchesPerSampleOracle) {
  const auto& host = testing::default_host();
  for (std::size_t layer : {0u, 1u}) {
    auto got = mean_activation(host.model(), host.trigger, layer);
    auto want = oracle_mean_activation(host.model(), host.trigger, layer);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.values[i], want[i], 1e-12) << layer << "," << i;
  }
}

TEST(MeanActivation, IndependentOfTriggerOrder) {
  const auto& host = testing::default_host();
  auto indices = host.trigger.indices;
  std::reverse(indices.begin(), indices.end());
  auto reordered = make_trigger_set(host.data, indices);
  EXPECT_EQ(mean_activation(host.model(), reordered, 1).values, mean_activation(host.model(), host.trigger, 1).values);
}

TEST(MeanActivation, RejectsOutputLayer) {
  const auto& host = testing::default_host();
  try {
    (void)mean_activation(host.model(), host.trigger, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidLayer);
  }
}

}  // namespace
}  // namespace freemark
