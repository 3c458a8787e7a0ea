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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <regex>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

#ifndef FREEMARK_CLI
#error "FREEMARK_CLI must name the freemark binary"
#endif

namespace freemark {
namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const testing::TempDir& dir, const std::string& args, const std::string& env = "") {
  std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" FREEMARK_CLI "' " + args + " 2>stderr.txt";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string field(const std::string& text, const std::string& name) {
  std::smatch m;
  std::regex re(name + ":\\s*(\\S+)");
  return std::regex_search(text, m, re) ? m[1].str() : std::string();
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    auto t = run(*dir_, "train --seed 1 --out host.fmck");
    ASSERT_EQ(t.code, 0) << t.out;
    host_fp_ = field(t.out, "fingerprint");
    auto k = run(*dir_, "--store st keygen --model host.fmck --seed 1 --set record.created_at=0");
    ASSERT_EQ(k.code, 0) << k.out;
    key_id_ = field(k.out, "key_id");
  }
  static void TearDownTestSuite() { delete dir_; }

  static std::string suspect(const std::string& model) {
    return "--store st verify --model " + model + " --key-id " + key_id_ + " --watermark watermark.hex";
  }

  static inline testing::TempDir* dir_ = nullptr;
  static inline std::string host_fp_;
  static inline std::string key_id_;
};

TEST_F(Cli, TrainPrintsFingerprintAndIsReplayable) {
  EXPECT_EQ(host_fp_.size(), 64u);
  auto again = run(*dir_, "train --seed 1 --out again.fmck");
  EXPECT_EQ(field(again.out, "fingerprint"), host_fp_);
  auto trace = nlohmann::json::parse(read_text(dir_->path() / "host.fmck.json"));
  EXPECT_EQ(trace["config"]["seed"], "1");
  EXPECT_EQ(trace["epoch_loss"].size(), 30u);
}

TEST_F(Cli, KeygenKeepsHostUnchanged) {
  auto info = nlohmann::json::parse(read_text(dir_->path() / "keygen.json"));
  EXPECT_EQ(info["fingerprint_before"], host_fp_);
  EXPECT_EQ(info["fingerprint_after"], host_fp_);
  EXPECT_EQ(info["key_id"], key_id_);
  EXPECT_TRUE(info["config"].contains("keygen.margin"));
  auto hex = read_text(dir_->path() / "watermark.hex");
  EXPECT_EQ(hex.size(), 129u);
}

TEST_F(Cli, KeygenReplayGivesSameRecord) {
  testing::TempDir other("cli-replay");
  std::filesystem::copy_file(dir_->path() / "host.fmck", other / "host.fmck");
  auto k = run(other, "--store st keygen --model host.fmck --seed 1 --set record.created_at=0");
  ASSERT_EQ(k.code, 0);
  EXPECT_EQ(field(k.out, "key_id"), key_id_);
  EXPECT_EQ(read_text(other / ("st/records/" + key_id_ + ".bin")),
            read_text(dir_->path() / ("st/records/" + key_id_ + ".bin")));
}

TEST_F(Cli, VerifyHostIsCopy) {
  auto v = run(*dir_, suspect("host.fmck"));
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_EQ(field(v.out, "ber"), "0");
  EXPECT_EQ(field(v.out, "verdict"), "copy");
}

TEST_F(Cli, VerifyJsonAndReportFile) {
  auto v = run(*dir_, "--json " + suspect("host.fmck") + " --out verdict.json");
  EXPECT_EQ(v.code, 0);
  auto j = nlohmann::json::parse(v.out);
  EXPECT_EQ(j["verdict"], "copy");
  auto file = nlohmann::json::parse(read_text(dir_->path() / "verdict.json"));
  EXPECT_EQ(file["config"]["verify.theta"], "0.25");
}

TEST_F(Cli, IndependentModelIsNotCopy) {
  ASSERT_EQ(run(*dir_, "train --seed 77 --out other.fmck").code, 0);
  auto v = run(*dir_, suspect("other.fmck"));
  EXPECT_EQ(v.code, 1) << v.out;
  double b = std::stod(field(v.out, "ber"));
  EXPECT_GT(b, 0.25);
  EXPECT_LT(b, 0.75);
}

TEST_F(Cli, PruneAndFinetuneKeepWatermark) {
  ASSERT_EQ(run(*dir_, "attack prune --model host.fmck --eta 0.02 --out pruned.fmck").code, 0);
  auto p = run(*dir_, suspect("pruned.fmck"));
  EXPECT_EQ(p.code, 0);
  EXPECT_EQ(field(p.out, "ber"), "0");
  ASSERT_EQ(run(*dir_, "attack finetune --model host.fmck --epochs 5 --freeze 0 --out tuned.fmck").code, 0);
  auto f = run(*dir_, suspect("tuned.fmck"));
  EXPECT_EQ(f.code, 0);
  EXPECT_EQ(field(f.out, "ber"), "0");
}

TEST_F(Cli, ForgeSummary) {
  auto f = run(*dir_, "--store st attack forge --model host.fmck --key-id " + key_id_ +
                          " --watermark watermark.hex --count 200 --out forged.csv");
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_NEAR(std::stod(field(f.out, "mean ber")), 0.5, 0.02);
  EXPECT_TRUE(std::filesystem::exists(dir_->path() / "forged.csv.json"));
}

TEST_F(Cli, ExtractWithoutWatermark) {
  auto e = run(*dir_, "--store st extract --model host.fmck --key-id " + key_id_);
  EXPECT_EQ(e.code, 0);
  auto hex = read_text(dir_->path() / "watermark.hex");
  EXPECT_EQ(field(e.out, "extracted") + "\n", hex);
}

TEST_F(Cli, StoreFromEnvironment) {
  auto l = run(*dir_, "list");
  EXPECT_EQ(l.code, 2);
  auto r = run(*dir_, "list", "FREEMARK_STORE=st");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(key_id_), std::string::npos);
}

TEST_F(Cli, CommitmentMismatchExits7) {
  std::ofstream(dir_->path() / "wrong.hex") << std::string(128, '0') << "\n";
  EXPECT_EQ(run(*dir_, "--store st verify --model host.fmck --key-id " + key_id_ + " --watermark wrong.hex").code, 7);
}

TEST_F(Cli, ArchitectureMismatchExits6) {
  ASSERT_EQ(run(*dir_, "--set model.hidden=32,16 train --out narrow.fmck").code, 0);
  EXPECT_EQ(run(*dir_, suspect("narrow.fmck")).code, 6);
}

TEST_F(Cli, ConfigErrorsExit2) {
  EXPECT_EQ(run(*dir_, "--store st keygen --model host.fmck --layer 2").code, 2);
  EXPECT_EQ(run(*dir_, "--store st keygen --model host.fmck --layer -1").code, 2);
  std::ofstream(dir_->path() / "bad.cfg") << "seed = 1\nthis line is wrong\n";
  EXPECT_EQ(run(*dir_, "--config bad.cfg train").code, 2);
  EXPECT_NE(read_text(dir_->path() / "stderr.txt").find("bad.cfg:2"), std::string::npos);
  EXPECT_EQ(run(*dir_, "attack prune --model host.fmck --eta -1 --out x.fmck").code, 2);
  EXPECT_EQ(run(*dir_, "nosuchcommand").code, 2);
}

TEST_F(Cli, DivergenceExits3) { EXPECT_EQ(run(*dir_, "--set train.lr=1e10 train --out d.fmck").code, 3); }

TEST_F(Cli, NonConvergenceExits4) {
  EXPECT_EQ(run(*dir_, "--store st4 --set keygen.max_iters=1 --set keygen.lr=1e-9 keygen --model host.fmck").code, 4);
}

TEST_F(Cli, AlphaExhaustionExits5) {
  // For this auxiliary vector, A d agrees with b on more than 55% of bits
  // once alpha >= 4.
  EXPECT_EQ(run(*dir_, "--store st5 --set keygen.seed=5 --set keygen.theta=0.45 --set keygen.alpha_init=4 keygen "
                       "--model host.fmck")
                .code,
            5);
}

TEST_F(Cli, UnknownKeyExits9) {
  EXPECT_EQ(run(*dir_, "--store st verify --model host.fmck --key-id " + std::string(64, 'a') +
                           " --watermark watermark.hex")
                .code,
            9);
}

TEST_F(Cli, ExperimentWithHighThetaExits8) {
  std::ofstream(dir_->path() / "plan.cfg") << "experiment.trials = 1\nexperiment.forged_count = 20\n"
                                              "experiment.hyperparam_variants = 1\nexperiment.data_variants = 1\n"
                                              "experiment.overwrite_count = 1\nexperiment.prune_grid = 0, 0.02\n";
  auto ok = run(*dir_, "--config plan.cfg experiment --out rep");
  EXPECT_EQ(ok.code, 0) << ok.out;
  auto bad = run(*dir_, "--config plan.cfg experiment --theta 0.6 --out rep-bad");
  EXPECT_EQ(bad.code, 8) << bad.out;
  auto report = nlohmann::json::parse(read_text(dir_->path() / "rep/report.json"));
  EXPECT_EQ(report["config"]["experiment.trials"], "1");
  EXPECT_TRUE(std::filesystem::exists(dir_->path() / "rep/prune_sweep.csv"));
}

}  // namespace
}  // namespace freemark
