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

#include <gtest/gtest.h>

#include "freemark/config.hpp"
#include "freemark/experiment.hpp"

namespace freemark {
namespace {

TEST(Config, ParsesCommentsAndWhitespace) {
  auto c = Config::parse("# comment\n\nseed = 3\n  train.lr=0.5  \nmodel.hidden = 16, 8\n");
  EXPECT_EQ(c.get_uint("seed", 1), 3u);
  EXPECT_EQ(c.get_double("train.lr", 0.0), 0.5);
  EXPECT_EQ(c.get_uints("model.hidden", {}), (std::vector<std::uint64_t>{16, 8}));
  EXPECT_EQ(c.get_string("missing", "x"), "x");
}

TEST(Config, ErrorsNameTheLine) {
  try {
    (void)Config::parse("seed = 1\nno equals sign\n", "plan.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("plan.cfg:2"), std::string::npos);
  }
  auto c = Config::parse("seed = 1\ntrain.lr = fast\n", "plan.cfg");
  try {
    (void)c.get_double("train.lr", 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("plan.cfg:2"), std::string::npos);
  }
  EXPECT_THROW((void)Config::parse("bad key = 1\n"), Error);
}

TEST(Config, OverridesWinAndAreEchoed) {
  auto c = Config::parse("seed = 3\n");
  c.set_override("seed=4");
  EXPECT_EQ(c.get_uint("seed", 1), 4u);
  EXPECT_EQ(c.get_uint("trials", 5), 5u);
  EXPECT_EQ(c.echo(), "seed = 4\ntrials = 5\n");
  EXPECT_THROW(c.set_override("noequals"), Error);
}

TEST(Config, UnusedKeys) {
  auto c = Config::parse("seed = 3\ntypo.key = 1\n");
  (void)c.get_uint("seed", 1);
  EXPECT_EQ(c.unused_keys(), std::vector<std::string>{"typo.key"});
}

TEST(Config, RejectsNegativeUint) {
  auto c = Config::parse("keygen.layer = -1\n");
  EXPECT_THROW((void)c.get_uint("keygen.layer", 1), Error);
}

TEST(HostSetup, DefaultsAndLayerCheck) {
  Config c;
  auto s = HostSetup::from_config(c);
  EXPECT_EQ(s.bits, 512u);
  EXPECT_EQ(s.layer, 1u);
  EXPECT_EQ(s.keygen.margin, 1.0);
  EXPECT_EQ(s.keygen.lr, 0.05);
  EXPECT_EQ(s.keygen.max_iters, 1000u);
  EXPECT_EQ(s.theta, 0.25);
  EXPECT_EQ(s.training.model.hidden, (std::vector<std::size_t>{32, 32}));
  Config bad = Config::parse("keygen.layer = 2\n");
  try {
    (void)HostSetup::from_config(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(ExperimentPlan, Defaults) {
  Config c;
  auto p = ExperimentPlan::from_config(c);
  EXPECT_EQ(p.forged_count, 200u);
  EXPECT_EQ(p.hyperparam_variants, 10u);
  EXPECT_EQ(p.data_variants, 10u);
  EXPECT_EQ(p.finetune_epochs, 5u);
  EXPECT_EQ(p.finetune_freeze, (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(p.overwrite_count, 10u);
  EXPECT_TRUE(std::is_sorted(p.prune_grid.begin(), p.prune_grid.end()));
}

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  auto file = Config::load(FREEMARK_SOURCE_DIR "/configs/default.cfg");
  Config empty;
  auto from_file = ExperimentPlan::from_config(file);
  auto built_in = ExperimentPlan::from_config(empty);
  for (const auto& [key, value] : empty.resolved()) {
    if (key == "keygen.seed") continue;  // derived, left commented in the file
    EXPECT_EQ(std::stod(file.resolved().at(key).substr(0, file.resolved().at(key).find(','))),
              std::stod(value.substr(0, value.find(','))))
        << key;
  }
  EXPECT_EQ(from_file.prune_grid, built_in.prune_grid);
  EXPECT_EQ(from_file.host.keygen, built_in.host.keygen);
}

// A reduced plan keeps this fast; the full default plan runs in the
// acceptance binary.
Config small_plan(const std::string& extra = "") {
  return Config::parse(
      "experiment.trials = 2\nexperiment.forged_count = 50\nexperiment.hyperparam_variants = 2\n"
      "experiment.data_variants = 2\nexperiment.overwrite_count = 2\nexperiment.prune_grid = 0, 0.02, 0.5\n" +
      extra);
}

TEST(Experiment, ReplayIsByteIdentical) {
  auto c1 = small_plan();
  auto c2 = small_plan();
  auto r1 = run_experiment(ExperimentPlan::from_config(c1), c1);
  auto r2 = run_experiment(ExperimentPlan::from_config(c2), c2);
  EXPECT_EQ(r1.doc.dump(2), r2.doc.dump(2));
  EXPECT_EQ(r1.prune_sweep_csv, r2.prune_sweep_csv);
  EXPECT_EQ(r1.forged_csv, r2.forged_csv);
  EXPECT_TRUE(r1.passed()) << r1.doc["checks"].dump(2);
  EXPECT_EQ(r1.doc["config"]["experiment.trials"], "2");
}

TEST(Experiment, ThetaAboveRandomBandBreaksIntegrity) {
  auto c = small_plan("verify.theta = 0.6\n");
  auto r = run_experiment(ExperimentPlan::from_config(c), c);
  EXPECT_FALSE(r.passed());
  bool flagged = false;
  for (const auto& f : r.failed()) flagged |= f.rfind("integrity.no_false_positives", 0) == 0;
  EXPECT_TRUE(flagged);
}

}  // namespace
}  // namespace freemark
