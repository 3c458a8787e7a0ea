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

// freemark: train a host, generate and escrow keys, attack, extract, verify,
// and run the experiment suite.
//
// Exit codes:
//   0  success; for verify/extract with a watermark, verdict "copy"
//   1  verdict "not-copy"
//   2  configuration or argument error
//   3  training diverged
//   4  key generation did not converge
//   5  no scaling factor in the search range (or degenerate activations)
//   6  suspect architecture or trigger set incompatible with the keys
//   7  claimed watermark does not match the registered commitment
//   8  experiment finished with failed checks
//   9  any other error (missing key, corrupt store, I/O)

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "freemark/freemark.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kNotCopy = 1,
  kConfigError = 2,
  kDiverged = 3,
  kNoConvergence = 4,
  kAlphaExhausted = 5,
  kIncompatible = 6,
  kCommitment = 7,
  kExperimentFailed = 8,
  kOtherError = 9,
};

int exit_code_for(freemark::ErrorCode code) {
  using freemark::ErrorCode;
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidLayer:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kClassUnderpopulated:
    case ErrorCode::kNothingToTrain:
      return kConfigError;
    case ErrorCode::kTrainingDiverged:
    case ErrorCode::kNonFinite:
      return kDiverged;
    case ErrorCode::kNonConvergence:
      return kNoConvergence;
    case ErrorCode::kSearchExhausted:
    case ErrorCode::kDegenerateActivation:
    case ErrorCode::kDegenerateInput:
      return kAlphaExhausted;
    case ErrorCode::kIncompatibleArchitecture:
    case ErrorCode::kTriggerMismatch:
      return kIncompatible;
    case ErrorCode::kClaimRejected:
      return kCommitment;
    default:
      return kOtherError;
  }
}

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed;
  std::string model;
  std::string layer;
  std::string theta;
  std::string eta;
  std::string count;
  std::string epochs;
  std::string freeze;
  std::string store;
  std::string key_id;
  std::string watermark;
  std::string out;
  bool json = false;
  bool allow_trigger_mismatch = false;
  int verbose = 0;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// File, then --set overrides, then the dedicated flags.
freemark::Config resolve_config(const Options& o, const char* eta_key = "attack.eta") {
  freemark::Config c = o.config_path.empty() ? freemark::Config{} : freemark::Config::load(o.config_path);
  for (const auto& s : o.overrides) c.set_override(s);
  auto flag = [&c](const std::string& value, const char* key, const char* name) {
    if (!value.empty()) c.set(key, value, name);
  };
  flag(o.seed, "seed", "--seed");
  flag(o.layer, "keygen.layer", "--layer");
  flag(o.theta, "verify.theta", "--theta");
  flag(o.eta, eta_key, "--eta");
  flag(o.count, "attack.count", "--count");
  flag(o.epochs, "attack.epochs", "--epochs");
  flag(o.freeze, "attack.freeze", "--freeze");
  return c;
}

void warn_unused(const freemark::Config& c, const Options& o) {
  if (o.verbose == 0) return;
  for (const auto& k : c.unused_keys()) std::cerr << "note: config key '" << k << "' is not used by this command\n";
}

fs::path store_root(const Options& o) {
  if (!o.store.empty()) return o.store;
  if (const char* env = std::getenv("FREEMARK_STORE"); env && *env) return env;
  freemark::fail(freemark::ErrorCode::kConfig, "no key store given (use --store or set FREEMARK_STORE)");
}

void need(const std::string& value, const char* flag) {
  if (value.empty()) freemark::fail(freemark::ErrorCode::kConfig, std::string(flag) + " is required");
}

// Synthetic blobs unless dataset.csv names a file.
freemark::Dataset training_data(freemark::Config& c, const freemark::HostSetup& s) {
  auto csv = c.get_string("dataset.csv", "");
  if (!csv.empty()) return freemark::load_dataset_csv(csv);
  return freemark::generate_synthetic_dataset(s.training.dataset);
}

freemark::WatermarkVector read_watermark(const std::string& path) {
  auto bytes = freemark::read_file(path);
  return freemark::WatermarkVector::from_hex(std::string(bytes.begin(), bytes.end()));
}

void write_sidecar(const fs::path& artifact, const std::string& command, const freemark::Config& c, json body) {
  body["command"] = command;
  body["config"] = c.resolved();
  freemark::write_file_atomic(fs::path(artifact.string() + ".json"), body.dump(2) + "\n");
}

int cmd_train(const Options& o) {
  auto c = resolve_config(o);
  auto s = freemark::HostSetup::from_config(c);
  auto data = training_data(c, s);
  auto out = fs::path(o.out.empty() ? "host.fmck" : o.out);
  warn_unused(c, o);

  auto result = freemark::train(s.training.model, data, s.training.hyper);
  double acc = freemark::accuracy(result.model, data);
  result.model.save(out);
  auto fp = freemark::to_hex(result.model.fingerprint());
  json trace = {{"checkpoint", out.string()},
                {"fingerprint", fp},
                {"dataset_id", data.id},
                {"accuracy", acc},
                {"epoch_accuracy", result.epoch_accuracy},
                {"epoch_loss", result.epoch_loss}};
  write_sidecar(out, "train", c, trace);
  if (o.json) {
    std::cout << trace.dump() << "\n";
  } else {
    std::cout << "checkpoint: " << out.string() << "\n"
              << "accuracy: " << fmt(acc) << "\n"
              << "fingerprint: " << fp << "\n";
  }
  return kOk;
}

int cmd_keygen(const Options& o) {
  need(o.model, "--model");
  auto c = resolve_config(o);
  auto s = freemark::HostSetup::from_config(c);
  auto model = freemark::ModelCheckpoint::load(o.model);
  if (!model.is_hidden_layer(s.layer))
    freemark::fail(freemark::ErrorCode::kConfig, "--layer " + std::to_string(s.layer) + " is not a hidden layer of " + o.model);
  auto data = training_data(c, s);
  auto trigger = freemark::trigger_for(s, data);
  auto owner = c.get_string("record.owner", "owner");
  auto created_at = static_cast<std::int64_t>(c.get_uint("record.created_at", static_cast<std::uint64_t>(std::time(nullptr))));
  auto root = store_root(o);
  auto wm_out = fs::path(c.get_string("keygen.watermark_out", "watermark.hex"));
  warn_unused(c, o);

  auto b = o.watermark.empty() ? freemark::watermark_for(s) : read_watermark(o.watermark);
  auto before = freemark::to_hex(model.fingerprint());
  auto outcome = freemark::generate_keys(model, trigger, s.layer, b, s.keygen);
  auto after = freemark::to_hex(model.fingerprint());

  freemark::KeyRecord record{owner, created_at, outcome.keys, trigger};
  freemark::KeyStore store(root);
  auto id = store.register_record(record);
  if (o.watermark.empty()) freemark::write_file_atomic(wm_out, b.to_hex() + "\n");

  json info = {{"key_id", id},
               {"store", root.string()},
               {"watermark_file", o.watermark.empty() ? wm_out.string() : o.watermark},
               {"watermark_commitment", freemark::to_hex(b.commitment())},
               {"fingerprint_before", before},
               {"fingerprint_after", after},
               {"alpha", outcome.keys.alpha},
               {"iterations", outcome.iterations},
               {"min_margin", outcome.min_margin}};
  info["command"] = "keygen";
  info["config"] = c.resolved();
  freemark::write_file_atomic(o.out.empty() ? "keygen.json" : o.out, info.dump(2) + "\n");
  info.erase("config");
  if (o.json) {
    std::cout << info.dump() << "\n";
  } else {
    std::cout << "key_id: " << id << "\n"
              << "fingerprint_before: " << before << "\n"
              << "fingerprint_after:  " << after << "\n"
              << (before == after ? "host model unchanged\n" : "HOST MODEL CHANGED\n")
              << "alpha: " << fmt(outcome.keys.alpha) << "\n"
              << "iterations: " << outcome.iterations << "\n";
    if (o.watermark.empty()) std::cout << "watermark written to " << wm_out.string() << " (keep it private)\n";
  }
  return before == after ? kOk : kOtherError;
}

int report_verdict(const freemark::BerReport& r, const Options& o, const freemark::Config& c) {
  if (!o.out.empty()) {
    json doc = r.to_json();
    doc["command"] = "verify";
    doc["config"] = c.resolved();
    freemark::write_file_atomic(o.out, doc.dump(2) + "\n");
  }
  std::cout << (o.json ? r.to_json().dump() + "\n" : r.to_text());
  return r.verdict == freemark::Verdict::kCopy ? kOk : kNotCopy;
}

double verify_theta(freemark::Config& c) { return c.get_double("verify.theta", c.get_double("keygen.theta", 0.25)); }

int cmd_verify(const Options& o) {
  need(o.model, "--model");
  need(o.key_id, "--key-id");
  need(o.watermark, "--watermark");
  auto c = resolve_config(o);
  double theta = verify_theta(c);
  warn_unused(c, o);
  freemark::KeyStore store(store_root(o));
  auto suspect = freemark::ModelCheckpoint::load(o.model);
  return report_verdict(store.verify_claim(o.key_id, suspect, read_watermark(o.watermark), theta), o, c);
}

// Extraction as the escrow agent runs it. With --watermark this is the same
// as verify; without, it only prints the extracted bits.
int cmd_extract(const Options& o) {
  if (!o.watermark.empty() && !o.allow_trigger_mismatch) return cmd_verify(o);
  need(o.model, "--model");
  need(o.key_id, "--key-id");
  auto c = resolve_config(o);
  double theta = verify_theta(c);
  warn_unused(c, o);
  freemark::KeyStore store(store_root(o));
  auto record = store.fetch(o.key_id);
  auto suspect = freemark::ModelCheckpoint::load(o.model);
  freemark::ExtractOptions opts{o.allow_trigger_mismatch};
  auto bits = freemark::extract(suspect, record.trigger, record.keys, opts);
  if (!o.watermark.empty()) {
    auto b = read_watermark(o.watermark);
    if (b.commitment() != record.watermark_commitment())
      freemark::fail(freemark::ErrorCode::kClaimRejected, "claimed watermark does not match the registered commitment");
    auto r = freemark::verify(b, bits, theta);
    r.key_id = o.key_id;
    r.suspect_fingerprint = freemark::to_hex(suspect.fingerprint());
    return report_verdict(r, o, c);
  }
  json doc = {{"key_id", o.key_id},
              {"suspect_fingerprint", freemark::to_hex(suspect.fingerprint())},
              {"bits", bits.size()},
              {"extracted", bits.size() % 8 == 0 ? freemark::to_hex(bits.pack()) : std::string()}};
  if (!o.out.empty()) {
    json file = doc;
    file["command"] = "extract";
    file["config"] = c.resolved();
    freemark::write_file_atomic(o.out, file.dump(2) + "\n");
  }
  if (o.json)
    std::cout << doc.dump() << "\n";
  else
    std::cout << "key_id: " << o.key_id << "\nbits: " << bits.size() << "\nextracted: " << doc["extracted"].get<std::string>()
              << "\n";
  return kOk;
}

int cmd_attack_prune(const Options& o) {
  need(o.model, "--model");
  need(o.out, "--out");
  auto c = resolve_config(o);
  auto s = freemark::HostSetup::from_config(c);
  double eta = c.get_double("attack.eta", 0.02);
  if (!(eta >= 0.0)) freemark::fail(freemark::ErrorCode::kConfig, "--eta must be >= 0");
  auto data = training_data(c, s);
  warn_unused(c, o);
  auto model = freemark::ModelCheckpoint::load(o.model);
  auto pruned = freemark::prune(model, {eta, std::nullopt});
  double before = freemark::accuracy(model, data), after = freemark::accuracy(pruned.model, data);
  pruned.model.save(o.out);
  json info = {{"attack", "prune"},
               {"eta", eta},
               {"zeroed", pruned.zeroed},
               {"total", pruned.total},
               {"fraction_zeroed", pruned.fraction_zeroed()},
               {"accuracy_before", before},
               {"accuracy_after", after},
               {"fingerprint", freemark::to_hex(pruned.model.fingerprint())}};
  write_sidecar(o.out, "attack prune", c, info);
  if (o.json)
    std::cout << info.dump() << "\n";
  else
    std::cout << "pruned " << pruned.zeroed << " of " << pruned.total << " weights (eta " << fmt(eta) << ")\n"
              << "accuracy: " << fmt(before) << " -> " << fmt(after) << "\n"
              << "written to " << o.out << "\n";
  return kOk;
}

int cmd_attack_finetune(const Options& o) {
  need(o.model, "--model");
  need(o.out, "--out");
  auto c = resolve_config(o);
  auto s = freemark::HostSetup::from_config(c);
  auto hyper = s.training.hyper;
  hyper.epochs = static_cast<std::uint32_t>(c.get_uint("attack.epochs", 5));
  hyper.lr = c.get_double("attack.lr", hyper.lr);
  hyper.seed = c.get_uint("attack.seed", freemark::mix64(hyper.seed ^ 0x4654ULL));
  auto frozen = c.get_uints("attack.freeze", {0});
  auto data = training_data(c, s);
  warn_unused(c, o);
  auto model = freemark::ModelCheckpoint::load(o.model);
  auto tuned = freemark::fine_tune(model, data, hyper, {{frozen.begin(), frozen.end()}});
  double before = freemark::accuracy(model, data), after = freemark::accuracy(tuned.model, data);
  tuned.model.save(o.out);
  json info = {{"attack", "finetune"},
               {"epochs", hyper.epochs},
               {"frozen", frozen},
               {"accuracy_before", before},
               {"accuracy_after", after},
               {"fingerprint", freemark::to_hex(tuned.model.fingerprint())}};
  write_sidecar(o.out, "attack finetune", c, info);
  if (o.json)
    std::cout << info.dump() << "\n";
  else
    std::cout << "fine-tuned " << hyper.epochs << " epochs\naccuracy: " << fmt(before) << " -> " << fmt(after)
              << "\nwritten to " << o.out << "\n";
  return kOk;
}

// Random key pairs scored against the genuine watermark on the suspect.
int cmd_attack_forge(const Options& o) {
  need(o.model, "--model");
  need(o.key_id, "--key-id");
  need(o.watermark, "--watermark");
  auto c = resolve_config(o);
  auto count = c.get_uint("attack.count", 200);
  auto seed = c.get_uint("attack.seed", freemark::mix64(c.get_uint("seed", 1) ^ 0x464fULL));
  double alpha = c.get_double("attack.alpha", 0.0);
  if (!(alpha >= 0.0)) freemark::fail(freemark::ErrorCode::kConfig, "attack.alpha must be >= 0");
  warn_unused(c, o);
  freemark::KeyStore store(store_root(o));
  auto record = store.fetch(o.key_id);
  auto b = read_watermark(o.watermark);
  if (b.commitment() != record.watermark_commitment())
    freemark::fail(freemark::ErrorCode::kClaimRejected, "claimed watermark does not match the registered commitment");
  auto model = freemark::ModelCheckpoint::load(o.model);
  freemark::check_compatible(model, record.keys);
  auto fhat = freemark::mean_activation(model, record.trigger, record.keys.layer);
  auto forged = freemark::forge_keys({count, seed, record.keys.bits(), record.keys.width()});
  auto bers = freemark::forged_bers(forged, alpha > 0.0 ? alpha : record.keys.alpha, fhat.values, b);
  auto summary = freemark::summarize(bers);
  if (!o.out.empty()) {
    std::string csv = "index,ber\n";
    for (std::size_t i = 0; i < bers.size(); ++i) csv += std::to_string(i) + "," + fmt(bers[i]) + "\n";
    freemark::write_file_atomic(o.out, csv);
    write_sidecar(o.out, "attack forge", c, {{"key_id", o.key_id}, {"summary", summary.to_json()}});
  }
  if (o.json)
    std::cout << summary.to_json().dump() << "\n";
  else
    std::cout << "forged pairs: " << summary.count << "\nmean ber: " << fmt(summary.mean) << "\nstddev: "
              << fmt(summary.stddev) << "\nmin: " << fmt(summary.min) << "\nmax: " << fmt(summary.max) << "\n";
  return kOk;
}

int cmd_experiment(const Options& o) {
  auto c = resolve_config(o, "experiment.prune_eta");
  auto plan = freemark::ExperimentPlan::from_config(c);
  warn_unused(c, o);
  auto dir = fs::path(o.out.empty() ? "report" : o.out);
  auto report = freemark::run_experiment(plan, c);
  freemark::write_report(report, dir);
  if (o.json) {
    std::cout << report.doc.dump() << "\n";
  } else {
    for (const auto& [label, value] : report.doc["table"].items()) std::cout << label << ": " << value.dump() << "\n";
    for (const auto& check : report.checks)
      std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << "  " << check.detail << "\n";
    std::cout << "report written to " << dir.string() << "\n";
  }
  if (!report.passed()) {
    std::cerr << "failed cells:\n";
    for (const auto& f : report.failed()) std::cerr << "  " << f << "\n";
    return kExperimentFailed;
  }
  return kOk;
}

int cmd_list(const Options& o) {
  freemark::KeyStore store(store_root(o));
  for (const auto& id : store.list()) std::cout << id << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"freemark: non-invasive white-box watermarking toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "override a config key (key=value), repeatable");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--store", o.store, "key store root (default $FREEMARK_STORE)");
  app.add_flag("--json", o.json, "print machine-readable JSON on stdout");
  app.add_flag("-v,--verbose", o.verbose, "report unused config keys");

  auto* train = app.add_subcommand("train", "train a host model");
  train->add_option("--out", o.out, "checkpoint path (default host.fmck)");

  auto* keygen = app.add_subcommand("keygen", "generate and escrow a key pair for a host model");
  keygen->add_option("--model", o.model, "host checkpoint");
  keygen->add_option("--layer", o.layer, "hidden layer index");
  keygen->add_option("--watermark", o.watermark, "watermark hex file (default: random, written to keygen.watermark_out)");
  keygen->add_option("--out", o.out, "keygen report JSON (default keygen.json)");

  auto add_suspect = [&o](CLI::App* cmd) {
    cmd->add_option("--model", o.model, "suspect checkpoint");
    cmd->add_option("--key-id", o.key_id, "registered key id");
    cmd->add_option("--watermark", o.watermark, "claimed watermark hex file");
    cmd->add_option("--theta", o.theta, "BER threshold for the copy verdict");
    cmd->add_option("--out", o.out, "write the report as JSON");
  };
  auto* extract = app.add_subcommand("extract", "extract the watermark bits from a suspect");
  add_suspect(extract);
  extract->add_flag("--allow-trigger-mismatch", o.allow_trigger_mismatch, "extract even if the trigger digest differs");
  auto* verify = app.add_subcommand("verify", "score a claimed watermark against a suspect");
  add_suspect(verify);

  auto* attack = app.add_subcommand("attack", "apply an attack to a model or key");
  attack->require_subcommand(1);
  auto* prune = attack->add_subcommand("prune", "zero every weight with |w| < eta");
  prune->add_option("--model", o.model, "input checkpoint");
  prune->add_option("--eta", o.eta, "pruning threshold");
  prune->add_option("--out", o.out, "output checkpoint");
  auto* finetune = attack->add_subcommand("finetune", "continue training on the task data");
  finetune->add_option("--model", o.model, "input checkpoint");
  finetune->add_option("--epochs", o.epochs, "epochs (default 5)");
  finetune->add_option("--freeze", o.freeze, "comma-separated frozen layer indices (default 0)");
  finetune->add_option("--out", o.out, "output checkpoint");
  auto* forge = attack->add_subcommand("forge", "score random key pairs against a registered watermark");
  forge->add_option("--model", o.model, "suspect checkpoint");
  forge->add_option("--key-id", o.key_id, "registered key id");
  forge->add_option("--watermark", o.watermark, "watermark hex file");
  forge->add_option("--count", o.count, "number of forged pairs (default 200)");
  forge->add_option("--out", o.out, "write per-pair BERs as CSV");

  auto* experiment = app.add_subcommand("experiment", "run the security, integrity and robustness suites");
  experiment->add_option("--out", o.out, "report directory (default report)");
  experiment->add_option("--theta", o.theta, "BER threshold for the copy verdict");
  experiment->add_option("--eta", o.eta, "pruning threshold checked for zero BER");

  auto* list = app.add_subcommand("list", "list registered key ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return cmd_train(o);
    if (*keygen) return cmd_keygen(o);
    if (*extract) return cmd_extract(o);
    if (*verify) return cmd_verify(o);
    if (*prune) return cmd_attack_prune(o);
    if (*finetune) return cmd_attack_finetune(o);
    if (*forge) return cmd_attack_forge(o);
    if (*experiment) return cmd_experiment(o);
    if (*list) return cmd_list(o);
  } catch (const freemark::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const freemark::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOtherError;
  }
  return kConfigError;
}
