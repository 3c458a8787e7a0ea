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

#ifndef FREEMARK_EXTRACT_HPP
#define FREEMARK_EXTRACT_HPP

#include <iostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "freemark/error.hpp"
#include "freemark/host_model.hpp"
#include "freemark/keygen.hpp"
#include "freemark/numeric.hpp"

namespace freemark {

/// b_hat = delta(A (alpha * fhat - d))
inline BitVector extract_bits(const Matrix& a, const RealVector& d, double alpha, const RealVector& fhat) {
  return delta(matvec(a, axpby(alpha, fhat, d)));
}

inline BitVector extract_bits(const SecretKeyPair& keys, const RealVector& fhat) {
  return extract_bits(keys.a, keys.d, keys.alpha, fhat);
}

struct ExtractOptions {
  /// Proceed (with a warning on stderr) when the trigger set's digest differs
  /// from the one recorded in the keys.
  bool allow_trigger_mismatch = false;
};

inline void check_compatible(const ModelCheckpoint& suspect, const SecretKeyPair& keys) {
  if (!suspect.is_hidden_layer(keys.layer))
    fail(ErrorCode::kIncompatibleArchitecture,
         "suspect has no hidden layer " + std::to_string(keys.layer) + " (keys target that layer)");
  if (suspect.width(keys.layer) != keys.width())
    fail(ErrorCode::kIncompatibleArchitecture, "suspect layer " + std::to_string(keys.layer) + " has width " +
                                                   std::to_string(suspect.width(keys.layer)) + ", keys expect " +
                                                   std::to_string(keys.width()));
}

inline BitVector extract(const ModelCheckpoint& suspect, const TriggerSet& trigger, const SecretKeyPair& keys,
                         const ExtractOptions& options = {}) {
  check_compatible(suspect, keys);
  if (trigger.digest != keys.trigger_digest) {
    if (!options.allow_trigger_mismatch)
      fail(ErrorCode::kTriggerMismatch, "trigger set digest differs from the one bound to the keys");
    std::cerr << "warning: trigger set digest differs from the keys; extracting anyway\n";
  }
  return extract_bits(keys, mean_activation(suspect, trigger, keys.layer).values);
}

enum class Verdict { kCopy, kNotCopy };

inline std::string_view to_string(Verdict v) { return v == Verdict::kCopy ? "copy" : "not-copy"; }

struct BerReport {
  BitVector extracted;
  double ber = 0.0;
  double theta = 0.0;
  Verdict verdict = Verdict::kNotCopy;
  std::string suspect_fingerprint;
  std::string key_id;

  std::string extracted_hex() const {
    return extracted.size() % 8 == 0 ? to_hex(extracted.pack()) : std::string();
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "key_id: " << key_id << "\n"
       << "suspect_fingerprint: " << suspect_fingerprint << "\n"
       << "bits: " << extracted.size() << "\n"
       << "ber: " << ber << "\n"
       << "theta: " << theta << "\n"
       << "verdict: " << to_string(verdict) << "\n"
       << "extracted: " << extracted_hex() << "\n";
    return os.str();
  }

  nlohmann::json to_json() const {
    return {{"key_id", key_id},
            {"suspect_fingerprint", suspect_fingerprint},
            {"bits", extracted.size()},
            {"ber", ber},
            {"theta", theta},
            {"verdict", to_string(verdict)},
            {"extracted", extracted_hex()}};
  }
};

/// Ownership rule: copy iff BER <= theta.
inline BerReport verify(const WatermarkVector& b, const BitVector& bhat, double theta) {
  require(theta >= 0.0 && theta <= 1.0, ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  BerReport r;
  r.ber = ber(b.bits(), bhat);
  r.extracted = bhat;
  r.theta = theta;
  r.verdict = r.ber <= theta ? Verdict::kCopy : Verdict::kNotCopy;
  return r;
}

}  // namespace freemark

#endif  // FREEMARK_EXTRACT_HPP
