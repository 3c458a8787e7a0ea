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

#ifndef FREEMARK_EXPERIMENT_HPP
#define FREEMARK_EXPERIMENT_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freemark/attacks.hpp"
#include "freemark/config.hpp"
#include "freemark/error.hpp"
#include "freemark/extract.hpp"
#include "freemark/host_model.hpp"
#include "freemark/keygen.hpp"
#include "freemark/numeric.hpp"

namespace freemark {

// Streams split off the master seed.
inline constexpr std::uint64_t kTriggerStream = 10;
inline constexpr std::uint64_t kWatermarkStream = 11;

/// Everything needed to build the host model and its primary key.
struct HostSetup {
  std::uint64_t seed = 1;
  TrainingSetup training;
  std::size_t trigger_per_class = 10;
  std::size_t bits = 512;
  std::size_t layer = 1;
  KeyGenConfig keygen;
  double theta = 0.25;

  /// Reads the shared keys (dataset.*, model.*, train.*, trigger.*,
  /// keygen.*, verify.theta, seed) with their defaults.
  static HostSetup from_config(Config& c) {
    HostSetup s;
    s.seed = c.get_uint("seed", 1);
    auto& d = s.training.dataset;
    d.num_classes = c.get_uint("dataset.classes", d.num_classes);
    d.per_class = c.get_uint("dataset.per_class", d.per_class);
    d.dim = c.get_uint("dataset.dim", d.dim);
    d.noise = c.get_double("dataset.noise", d.noise);
    d.center_scale = c.get_double("dataset.center_scale", d.center_scale);
    d.seed = c.get_uint("dataset.seed", d.seed);
    if (c.has("dataset.sample_seed")) d.sample_seed = c.get_uint("dataset.sample_seed", d.seed);
    auto& m = s.training.model;
    m.input_dim = d.dim;
    m.num_classes = d.num_classes;
    auto hidden = c.get_uints("model.hidden", {32, 32});
    m.hidden.assign(hidden.begin(), hidden.end());
    auto& h = s.training.hyper;
    h.epochs = static_cast<std::uint32_t>(c.get_uint("train.epochs", h.epochs));
    h.lr = c.get_double("train.lr", h.lr);
    h.batch = static_cast<std::uint32_t>(c.get_uint("train.batch", h.batch));
    h.seed = c.get_uint("train.seed", s.seed);
    s.trigger_per_class = c.get_uint("trigger.per_class", s.trigger_per_class);
    s.bits = c.get_uint("keygen.bits", s.bits);
    s.layer = c.get_uint("keygen.layer", s.layer);
    auto& k = s.keygen;
    k.lr = c.get_double("keygen.lr", k.lr);
    k.max_iters = static_cast<std::uint32_t>(c.get_uint("keygen.max_iters", k.max_iters));
    k.margin = c.get_double("keygen.margin", k.margin);
    k.theta = c.get_double("keygen.theta", k.theta);
    k.alpha_init = c.get_double("keygen.alpha_init", k.alpha_init);
    k.alpha_step = c.get_double("keygen.alpha_step", k.alpha_step);
    k.alpha_max = c.get_double("keygen.alpha_max", k.alpha_max);
    k.seed = c.get_uint("keygen.seed", mix64(s.seed ^ 0x4b47ULL));
    s.theta = c.get_double("verify.theta", k.theta);
    require(!m.hidden.empty(), ErrorCode::kConfig, "model.hidden needs at least one layer");
    require(s.layer < m.hidden.size(), ErrorCode::kConfig,
            "keygen.layer " + std::to_string(s.layer) + " is not a hidden layer index (0.." +
                std::to_string(m.hidden.size() - 1) + ")");
    require(s.theta >= 0.0 && s.theta <= 1.0, ErrorCode::kConfig, "verify.theta must lie in [0, 1]");
    return s;
  }
};

struct ExperimentPlan {
  HostSetup host;
  std::size_t trials = 5;
  std::size_t forged_count = 200;
  double forged_alpha = 0.0;  // 0: forger uses the genuine alpha
  std::size_t hyperparam_variants = 10;
  std::size_t data_variants = 10;
  double prune_eta = 0.02;
  std::vector<double> prune_grid = {0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0};
  std::uint32_t finetune_epochs = 5;
  std::vector<std::uint64_t> finetune_freeze = {0};
  std::size_t overwrite_count = 10;
  double max_accuracy_drop = 0.10;
  double forged_lo = 0.39, forged_hi = 0.61;
  double forged_mean_lo = 0.45, forged_mean_hi = 0.55;
  double integrity_lo = 0.35, integrity_hi = 0.65;

  static ExperimentPlan from_config(Config& c) {
    ExperimentPlan p;
    p.host = HostSetup::from_config(c);
    p.trials = c.get_uint("experiment.trials", p.trials);
    p.forged_count = c.get_uint("experiment.forged_count", p.forged_count);
    p.forged_alpha = c.get_double("experiment.forged_alpha", p.forged_alpha);
    p.hyperparam_variants = c.get_uint("experiment.hyperparam_variants", p.hyperparam_variants);
    p.data_variants = c.get_uint("experiment.data_variants", p.data_variants);
    p.prune_eta = c.get_double("experiment.prune_eta", p.prune_eta);
    p.prune_grid = c.get_doubles("experiment.prune_grid", p.prune_grid);
    p.finetune_epochs = static_cast<std::uint32_t>(c.get_uint("experiment.finetune_epochs", p.finetune_epochs));
    p.finetune_freeze = c.get_uints("experiment.finetune_freeze", p.finetune_freeze);
    p.overwrite_count = c.get_uint("experiment.overwrite_count", p.overwrite_count);
    p.max_accuracy_drop = c.get_double("experiment.max_accuracy_drop", p.max_accuracy_drop);
    p.forged_lo = c.get_double("experiment.forged_ber_min", p.forged_lo);
    p.forged_hi = c.get_double("experiment.forged_ber_max", p.forged_hi);
    p.forged_mean_lo = c.get_double("experiment.forged_mean_min", p.forged_mean_lo);
    p.forged_mean_hi = c.get_double("experiment.forged_mean_max", p.forged_mean_hi);
    p.integrity_lo = c.get_double("experiment.integrity_ber_min", p.integrity_lo);
    p.integrity_hi = c.get_double("experiment.integrity_ber_max", p.integrity_hi);
    require(p.trials >= 1, ErrorCode::kConfig, "experiment.trials must be >= 1");
    require(p.forged_count >= 1, ErrorCode::kConfig, "experiment.forged_count must be >= 1");
    require(p.forged_alpha >= 0.0, ErrorCode::kConfig, "experiment.forged_alpha must be >= 0");
    std::sort(p.prune_grid.begin(), p.prune_grid.end());
    return p;
  }
};

/// The trained host, its trigger set, the owner's watermark and primary key.
struct HostContext {
  Dataset data;
  TrainResult trained;
  TriggerSet trigger;
  WatermarkVector watermark;
  KeyGenOutcome key;
  double accuracy = 0.0;

  const ModelCheckpoint& model() const { return trained.model; }
};

inline TriggerSet trigger_for(const HostSetup& s, const Dataset& data) {
  Rng rng = Rng(s.seed).split(kTriggerStream);
  return select_trigger_set(data, s.trigger_per_class, rng);
}

inline WatermarkVector watermark_for(const HostSetup& s) {
  Rng rng = Rng(s.seed).split(kWatermarkStream);
  return WatermarkVector::random(rng, s.bits);
}

inline HostContext prepare_host(const HostSetup& s) {
  HostContext ctx{generate_synthetic_dataset(s.training.dataset), {}, {}, watermark_for(s), {}, 0.0};
  ctx.trained = train(s.training.model, ctx.data, s.training.hyper);
  ctx.accuracy = accuracy(ctx.trained.model, ctx.data);
  ctx.trigger = trigger_for(s, ctx.data);
  ctx.key = generate_keys(ctx.trained.model, ctx.trigger, s.layer, ctx.watermark, s.keygen);
  return ctx;
}

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;

  nlohmann::json to_json() const { return {{"name", name}, {"passed", passed}, {"detail", detail}}; }
};

struct ExperimentReport {
  nlohmann::json doc = nlohmann::json::object();
  std::vector<Check> checks;
  std::string prune_sweep_csv;
  std::string forged_csv;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (!c.passed) out.push_back(c.name + ": " + c.detail);
    return out;
  }
};

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
inline std::uint64_t derive(std::uint64_t master, std::uint64_t tag, std::size_t k) {
  return mix64(master ^ (tag + k));
}
}  // namespace detail

/// Correct-key extraction over `trials` independent key generations, then
/// 200-style forged-key extraction against the primary key's alpha.
inline nlohmann::json run_security(const ExperimentPlan& plan, const HostContext& host, ExperimentReport& report) {
  nlohmann::json out;
  const auto& s = plan.host;
  auto fp = to_hex(host.model().fingerprint());
  nlohmann::json rows = nlohmann::json::array();
  std::size_t nonzero = 0;
  for (std::size_t t = 0; t < plan.trials; ++t) {
    KeyGenConfig cfg = s.keygen;
    cfg.seed = t == 0 ? s.keygen.seed : detail::derive(s.keygen.seed, 0x5345'0000ULL, t);
    KeyGenOutcome k = t == 0 ? host.key : generate_keys(host.model(), host.trigger, s.layer, host.watermark, cfg);
    auto r = verify(host.watermark, extract(host.model(), host.trigger, k.keys), s.theta);
    nonzero += r.ber != 0.0;
    rows.push_back({{"trial", t},
                    {"keygen_seed", cfg.seed},
                    {"key_id", to_hex(k.keys.key_id())},
                    {"model_fingerprint", fp},
                    {"alpha", k.keys.alpha},
                    {"iterations", k.iterations},
                    {"ber", r.ber},
                    {"verdict", to_string(r.verdict)}});
  }
  out["correct_key"] = rows;
  report.checks.push_back({"security.correct_key_ber_zero", nonzero == 0,
                           std::to_string(nonzero) + " of " + std::to_string(plan.trials) + " trials with BER > 0"});

  ForgedKeySpec spec{plan.forged_count, detail::derive(s.seed, 0x464f'0000ULL, 0), host.key.keys.bits(),
                     host.key.keys.width()};
  double alpha = plan.forged_alpha > 0.0 ? plan.forged_alpha : host.key.keys.alpha;
  auto bers = forged_bers(forge_keys(spec), alpha, host.key.fbar.values, host.watermark);
  auto summary = summarize(bers);
  std::size_t out_of_band = 0, copies = 0;
  std::ostringstream csv;
  csv << "pair,ber\n";
  for (std::size_t i = 0; i < bers.size(); ++i) {
    out_of_band += bers[i] < plan.forged_lo || bers[i] > plan.forged_hi;
    copies += bers[i] <= s.theta;
    csv << i << "," << detail::fmt(bers[i]) << "\n";
  }
  report.forged_csv = csv.str();
  out["forged"] = {{"seed", spec.seed},
                   {"alpha", alpha},
                   {"key_id", to_hex(host.key.keys.key_id())},
                   {"summary", summary.to_json()},
                   {"copy_verdicts", copies}};
  report.checks.push_back({"security.forged_ber_band", out_of_band == 0,
                           std::to_string(out_of_band) + " of " + std::to_string(bers.size()) + " outside [" +
                               detail::fmt(plan.forged_lo) + ", " + detail::fmt(plan.forged_hi) + "]"});
  report.checks.push_back({"security.forged_ber_mean",
                           summary.mean >= plan.forged_mean_lo && summary.mean <= plan.forged_mean_hi,
                           "mean " + detail::fmt(summary.mean)});
  return out;
}

/// Independently trained models of the same architecture and task; none may
/// be judged a copy.
inline nlohmann::json run_integrity(const ExperimentPlan& plan, const HostContext& host, ExperimentReport& report) {
  const auto& s = plan.host;
  nlohmann::json rows = nlohmann::json::array();
  std::size_t false_positives = 0, out_of_band = 0;
  auto run = [&](const Variation& v, std::size_t index) {
    auto trained = train_unmarked_variant(s.training, v);
    auto r = verify(host.watermark, extract(trained.model, host.trigger, host.key.keys), s.theta);
    false_positives += r.verdict == Verdict::kCopy;
    out_of_band += r.ber < plan.integrity_lo || r.ber > plan.integrity_hi;
    nlohmann::json row = {{"variant", v.label()},
                          {"index", index},
                          {"model_fingerprint", to_hex(trained.model.fingerprint())},
                          {"key_id", to_hex(host.key.keys.key_id())},
                          {"train_accuracy", trained.epoch_accuracy.back()},
                          {"seed", v.seed.value_or(s.training.hyper.seed)},
                          {"ber", r.ber},
                          {"verdict", to_string(r.verdict)}};
    if (v.lr) row["lr"] = *v.lr;
    if (v.epochs) row["epochs"] = *v.epochs;
    if (v.sample_seed) row["sample_seed"] = *v.sample_seed;
    rows.push_back(row);
  };
  for (std::size_t k = 0; k < plan.hyperparam_variants; ++k) run(hyperparam_variation(s.training, k), k);
  for (std::size_t k = 0; k < plan.data_variants; ++k) run(data_variation(s.training, k), k);
  report.checks.push_back({"integrity.no_false_positives", false_positives == 0,
                           std::to_string(false_positives) + " copy verdicts among " + std::to_string(rows.size())});
  report.checks.push_back({"integrity.ber_band", out_of_band == 0,
                           std::to_string(out_of_band) + " of " + std::to_string(rows.size()) + " outside [" +
                               detail::fmt(plan.integrity_lo) + ", " + detail::fmt(plan.integrity_hi) + "]"});
  return {{"variants", rows}, {"false_positives", false_positives}};
}

/// Fine-tuning, the pruning sweep and the overwriting scenario.
inline nlohmann::json run_robustness(const ExperimentPlan& plan, const HostContext& host, ExperimentReport& report) {
  const auto& s = plan.host;
  const auto& keys = host.key.keys;
  auto key_id = to_hex(keys.key_id());
  nlohmann::json out;

  // Fine-tuning.
  FreezeSpec freeze;
  for (auto l : plan.finetune_freeze) freeze.frozen.insert(static_cast<std::size_t>(l));
  nlohmann::json ft_rows = nlohmann::json::array();
  std::size_t ft_nonzero = 0;
  for (std::size_t t = 0; t < plan.trials; ++t) {
    Hyper h = s.training.hyper;
    h.epochs = plan.finetune_epochs;
    h.seed = detail::derive(s.seed, 0x4654'0000ULL, t);
    auto tuned = fine_tune(host.model(), host.data, h, freeze);
    auto r = verify(host.watermark, extract(tuned.model, host.trigger, keys), s.theta);
    ft_nonzero += r.ber != 0.0;
    AttackRow row{"fine-tune", {{"epochs", h.epochs}, {"lr", h.lr}, {"seed", h.seed}, {"frozen", plan.finetune_freeze}},
                  host.accuracy, accuracy(tuned.model, host.data), r.ber, r.verdict};
    auto j = row.to_json();
    j["model_fingerprint"] = to_hex(tuned.model.fingerprint());
    j["key_id"] = key_id;
    ft_rows.push_back(j);
  }
  out["fine_tune"] = ft_rows;
  report.checks.push_back({"robustness.fine_tune_ber_zero", ft_nonzero == 0,
                           std::to_string(ft_nonzero) + " of " + std::to_string(plan.trials) + " fine-tunes with BER > 0"});

  // Pruning at the pinned threshold.
  auto prune_row = [&](double eta) {
    auto pruned = prune(host.model(), {eta, std::nullopt});
    auto r = verify(host.watermark, extract(pruned.model, host.trigger, keys), s.theta);
    AttackRow row{"prune", {{"eta", eta}, {"fraction_zeroed", pruned.fraction_zeroed()}},
                  host.accuracy, accuracy(pruned.model, host.data), r.ber, r.verdict};
    auto j = row.to_json();
    j["model_fingerprint"] = to_hex(pruned.model.fingerprint());
    j["key_id"] = key_id;
    return std::pair{row, j};
  };
  auto [pinned, pinned_json] = prune_row(plan.prune_eta);
  out["pruning"] = pinned_json;
  double drop = pinned.accuracy_before - pinned.accuracy_after;
  report.checks.push_back({"robustness.prune_ber_zero", pinned.ber == 0.0,
                           "eta " + detail::fmt(plan.prune_eta) + " BER " + detail::fmt(pinned.ber)});
  report.checks.push_back({"robustness.prune_accuracy_drop", drop <= plan.max_accuracy_drop,
                           "accuracy drop " + detail::fmt(drop)});

  // Sweep.
  nlohmann::json sweep = nlohmann::json::array();
  std::ostringstream csv;
  csv << "eta,fraction_zeroed,accuracy,ber\n";
  double chance_floor = 1.0 / static_cast<double>(host.data.num_classes) + 0.10;
  nlohmann::json largest_zero = nullptr;
  bool above_floor = true;
  for (double eta : plan.prune_grid) {
    auto [row, j] = prune_row(eta);
    sweep.push_back(j);
    csv << detail::fmt(eta) << "," << detail::fmt(row.params["fraction_zeroed"].get<double>()) << ","
        << detail::fmt(row.accuracy_after) << "," << detail::fmt(row.ber) << "\n";
    above_floor = above_floor && row.accuracy_after >= chance_floor;
    if (above_floor && row.ber == 0.0) largest_zero = eta;
  }
  report.prune_sweep_csv = csv.str();
  out["prune_sweep"] = sweep;
  out["largest_eta_with_zero_ber"] = largest_zero;

  // Overwriting.
  std::vector<WatermarkVector> extra;
  Rng wm_rng = Rng(s.seed).split(0x4f57);
  for (std::size_t i = 0; i < plan.overwrite_count; ++i) extra.push_back(WatermarkVector::random(wm_rng, s.bits));
  auto ow = overwrite_scenario(host.model(), host.trigger, s.layer, {{keys, host.watermark}}, extra, s.keygen);
  nlohmann::json ow_keys = nlohmann::json::array();
  for (const auto& a : ow.added) ow_keys.push_back(to_hex(a.keys.key_id()));
  out["overwrite"] = {{"watermarks", ow.bers.size()},
                      {"bers", ow.bers},
                      {"added_key_ids", ow_keys},
                      {"fingerprint_before", to_hex(ow.fingerprint_before)},
                      {"fingerprint_after", to_hex(ow.fingerprint_after)}};
  report.checks.push_back({"robustness.overwrite_all_extract", ow.all_pass(),
                           std::to_string(ow.bers.size()) + " watermarks, fingerprint " +
                               (ow.fingerprint_unchanged() ? "unchanged" : "CHANGED")});
  return out;
}

inline double mean_of(const nlohmann::json& rows, const char* field) {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r[field].get<double>());
  return v.empty() ? 0.0 : compensated_sum(v) / static_cast<double>(v.size());
}

inline ExperimentReport run_experiment(const ExperimentPlan& plan, const Config& resolved) {
  ExperimentReport report;
  HostContext host = prepare_host(plan.host);
  Digest fingerprint = host.model().fingerprint();

  auto& doc = report.doc;
  doc["schema"] = "freemark-report/1";
  doc["rng"] = Rng::kAlgorithmId;
  doc["config"] = resolved.resolved();
  doc["host"] = {{"fingerprint", to_hex(fingerprint)},
                 {"dataset_id", host.data.id},
                 {"train_accuracy", host.accuracy},
                 {"layer", plan.host.layer},
                 {"width", host.key.keys.width()},
                 {"bits", host.watermark.size()},
                 {"watermark_commitment", to_hex(host.watermark.commitment())},
                 {"primary_key_id", to_hex(host.key.keys.key_id())},
                 {"alpha", host.key.keys.alpha},
                 {"keygen_iterations", host.key.iterations}};
  doc["security"] = run_security(plan, host, report);
  doc["integrity"] = run_integrity(plan, host, report);
  doc["robustness"] = run_robustness(plan, host, report);

  report.checks.push_back({"non_invasive.host_fingerprint", host.model().fingerprint() == fingerprint,
                           "host fingerprint after all experiments"});

  // Headline numbers, one per cell.
  const auto& sec = doc["security"];
  const auto& integ = doc["integrity"]["variants"];
  nlohmann::json hp = nlohmann::json::array(), dv = nlohmann::json::array();
  for (const auto& r : integ) (r["variant"] == "hyperparams" ? hp : dv).push_back(r);
  const auto& rob = doc["robustness"];
  doc["table"] = {
      {"accuracy", host.accuracy},
      {"ber_correct_key", mean_of(sec["correct_key"], "ber")},
      {"ber_hyperparam_variants", mean_of(hp, "ber")},
      {"ber_data_variants", mean_of(dv, "ber")},
      {"accuracy_after_finetune", mean_of(rob["fine_tune"], "accuracy_after")},
      {"ber_after_finetune", mean_of(rob["fine_tune"], "ber")},
      {"accuracy_after_prune", rob["pruning"]["accuracy_after"]},
      {"ber_after_prune", rob["pruning"]["ber"]},
      {"prune_eta", plan.prune_eta},
      {"forged_ber_mean", sec["forged"]["summary"]["mean"]},
  };
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back(c.to_json());
  doc["checks"] = checks;
  doc["passed"] = report.passed();
  return report;
}

/// Writes report.json, prune_sweep.csv and forged_bers.csv into `dir`.
inline void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", report.doc.dump(2) + "\n");
  write_file_atomic(dir / "prune_sweep.csv", report.prune_sweep_csv);
  write_file_atomic(dir / "forged_bers.csv", report.forged_csv);
}

}  // namespace freemark

#endif  // FREEMARK_EXPERIMENT_HPP
