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

#ifndef FREEMARK_KEYGEN_HPP
#define FREEMARK_KEYGEN_HPP

#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "freemark/binary_io.hpp"
#include "freemark/error.hpp"
#include "freemark/host_model.hpp"
#include "freemark/numeric.hpp"
#include "freemark/sha256.hpp"

namespace freemark {

/// The owner's secret message. At least 8 bits.
class WatermarkVector {
 public:
  static constexpr std::size_t kMinBits = 8;
  static constexpr std::size_t kDefaultBits = 512;

  WatermarkVector() = default;
  explicit WatermarkVector(BitVector bits) : bits_(std::move(bits)) {
    require(bits_.size() >= kMinBits, ErrorCode::kInvalidArgument,
            "watermark needs at least " + std::to_string(kMinBits) + " bits");
  }

  static WatermarkVector random(Rng& rng, std::size_t n = kDefaultBits) { return WatermarkVector(sample_bits(rng, n)); }

  /// Lowercase hex, two characters per byte, MSB-first within each byte.
  static WatermarkVector from_hex(std::string_view hex) {
    while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.back()))) hex.remove_suffix(1);
    while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.front()))) hex.remove_prefix(1);
    require(hex.size() % 2 == 0 && !hex.empty(), ErrorCode::kFormat, "watermark hex must have an even, nonzero length");
    Bytes packed(hex.size() / 2);
    for (std::size_t i = 0; i < packed.size(); ++i) {
      unsigned v = 0;
      for (char c : hex.substr(2 * i, 2)) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
        else fail(ErrorCode::kFormat, "watermark hex must be lowercase [0-9a-f]");
      }
      packed[i] = static_cast<std::uint8_t>(v);
    }
    return WatermarkVector(BitVector::unpack(packed, packed.size() * 8));
  }

  std::string to_hex() const {
    require(bits_.size() % 8 == 0, ErrorCode::kFormat, "hex form needs a bit length divisible by 8");
    return freemark::to_hex(bits_.pack());
  }

  /// SHA-256 of the canonical BitVector serialization.
  Digest commitment() const { return sha256(serialize(bits_)); }

  const BitVector& bits() const { return bits_; }
  std::size_t size() const { return bits_.size(); }

  friend bool operator==(const WatermarkVector&, const WatermarkVector&) = default;

 private:
  BitVector bits_;
};

struct KeyGenConfig {
  double lr = 0.05;
  std::uint32_t max_iters = 1000;
  double margin = 1.0;
  double theta = 0.25;
  double alpha_init = 1.0;
  double alpha_step = 0.5;
  double alpha_max = 16.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(lr > 0.0 && std::isfinite(lr), ErrorCode::kInvalidArgument, "keygen lr must be > 0");
    require(max_iters >= 1, ErrorCode::kInvalidArgument, "keygen max_iters must be >= 1");
    require(margin >= 0.0 && std::isfinite(margin), ErrorCode::kInvalidArgument, "keygen margin must be >= 0");
    require(theta > 0.0 && theta < 0.5, ErrorCode::kInvalidArgument, "keygen theta must lie strictly in (0, 0.5)");
    require(alpha_step > 0.0 && alpha_max >= alpha_init && std::isfinite(alpha_max), ErrorCode::kInvalidArgument,
            "keygen alpha grid is empty");
  }

  friend bool operator==(const KeyGenConfig&, const KeyGenConfig&) = default;
};

// Streams split off KeyGenConfig::seed.
inline constexpr std::uint64_t kAuxiliaryStream = 0;
inline constexpr std::uint64_t kMatrixInitStream = 1;

struct MatrixSolution {
  Matrix a;
  std::size_t iterations = 0;
  double min_margin = 0.0;  // min_i s_i (A mu)_i
};

namespace detail {

// Rows whose pre-threshold value has the wrong sign, or magnitude below the
// margin. With margin 0 only the sign rule applies (x >= 0 encodes a one).
inline std::size_t violations(const RealVector& z, const BitVector& b, double margin, double* min_margin) {
  std::size_t bad = 0;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    double signed_z = b[i] ? z[i] : -z[i];
    lowest = std::min(lowest, signed_z);
    bool ok = delta(z[i]) == b[i] && std::abs(z[i]) >= margin;
    bad += !ok;
  }
  if (min_margin) *min_margin = lowest;
  return bad;
}

}  // namespace detail

/// Finds A with delta(A mu) == b and |(A mu)_i| >= margin for every row.
///
/// The thresholded loss has zero gradient almost everywhere, so descent runs
/// on the smooth hinge J(A) = sum_i softplus(m - s_i (A mu)_i), s_i = 2 b_i - 1,
/// whose row gradient is -s_i sigmoid(m - s_i (A mu)_i) mu. Rows already
/// meeting sign and margin are left where they are; the softplus gradient never
/// vanishes, and pushing satisfied rows further along mu would correlate every
/// row of A with mu. Iteration stops once all rows are satisfied. A starts
/// from i.i.d. N(0, 1/sqrt(M)) entries (variance 1/sqrt(M)).
inline MatrixSolution derive_matrix(const WatermarkVector& b, const RealVector& mu, const KeyGenConfig& cfg) {
  cfg.validate();
  require(mu.size() >= 8, ErrorCode::kInvalidArgument, "auxiliary vector needs length >= 8");
  if (mu.is_zero()) fail(ErrorCode::kDegenerateInput, "auxiliary vector is zero; A*mu is zero for every A");

  const std::size_t n = b.size(), m = mu.size();
  Rng init = Rng(cfg.seed).split(kMatrixInitStream);
  MatrixSolution sol{sample_gaussian_matrix(init, n, m, std::pow(static_cast<double>(m), -0.25)), 0, 0.0};
  const BitVector& bits = b.bits();

  for (std::size_t t = 0;; ++t) {
    RealVector z = matvec(sol.a, mu);
    std::size_t bad = detail::violations(z, bits, cfg.margin, &sol.min_margin);
    sol.iterations = t;
    if (bad == 0) return sol;
    if (t == cfg.max_iters) throw NonConvergenceError(bad, t);
    for (std::size_t i = 0; i < n; ++i) {
      double s = bits[i] ? 1.0 : -1.0;
      if (delta(z[i]) == bits[i] && s * z[i] >= cfg.margin) continue;
      double step = cfg.lr * s * sigmoid(cfg.margin - s * z[i]);
      auto row = sol.a.row(i);
      for (std::size_t j = 0; j < m; ++j) row[j] += step * mu[j];
    }
  }
}

/// ||delta(A d) - b||_1
inline std::size_t security_mismatches(const Matrix& a, const RealVector& d, const BitVector& b) {
  return hamming(delta(matvec(a, d)), b);
}

struct ScaledOffset {
  RealVector d;
  double alpha = 0.0;
};

/// Scans alpha = alpha_init + k * alpha_step up to alpha_max and returns the
/// first (d = alpha * fbar - mu, alpha) whose d alone mismatches b in at least
/// theta * N positions and for which A (alpha * fbar - d) reproduces b.
inline ScaledOffset derive_d_and_alpha(const Matrix& a, const RealVector& mu, const ActivationVector& fbar,
                                       const WatermarkVector& b, const KeyGenConfig& cfg) {
  cfg.validate();
  require(fbar.size() == mu.size() && mu.size() == a.cols(), ErrorCode::kDimensionMismatch,
          "fbar, mu and A columns must agree");
  require(a.rows() == b.size(), ErrorCode::kDimensionMismatch, "A rows must equal watermark length");
  if (fbar.values.is_zero())
    fail(ErrorCode::kDegenerateActivation, "mean activation is zero; d = -mu regardless of alpha");

  const double needed = cfg.theta * static_cast<double>(b.size());
  for (std::size_t k = 0;; ++k) {
    double alpha = cfg.alpha_init + static_cast<double>(k) * cfg.alpha_step;
    if (alpha > cfg.alpha_max) break;
    RealVector d = axpby(alpha, fbar.values, mu);
    if (static_cast<double>(security_mismatches(a, d, b.bits())) < needed) continue;
    if (delta(matvec(a, axpby(alpha, fbar.values, d))) != b.bits()) continue;
    return {std::move(d), alpha};
  }
  fail(ErrorCode::kSearchExhausted, "no alpha in [" + std::to_string(cfg.alpha_init) + ", " +
                                         std::to_string(cfg.alpha_max) + "] satisfies the security constraint");
}

/// Escrowed key material. Serialized as
///   "FMKY" | u32 version | u64 N | u64 M | u64 layer | f64 alpha | A | d |
///   trigger digest | watermark commitment | config echo | str(rng id)
class SecretKeyPair {
 public:
  static constexpr std::string_view kMagic = "FMKY";
  static constexpr std::uint32_t kVersion = 1;

  Matrix a;
  RealVector d;
  double alpha = 0.0;
  std::size_t layer = 0;
  Digest trigger_digest{};
  Digest watermark_commitment{};
  KeyGenConfig config;
  std::string rng = Rng::kAlgorithmId;

  std::size_t bits() const { return a.rows(); }
  std::size_t width() const { return a.cols(); }

  Bytes serialize() const {
    ByteWriter out;
    out.raw(kMagic);
    out.u32(kVersion);
    out.u64(a.rows());
    out.u64(a.cols());
    out.u64(layer);
    out.f64(alpha);
    write(out, a);
    write(out, d);
    out.raw(trigger_digest);
    out.raw(watermark_commitment);
    out.f64(config.lr);
    out.u32(config.max_iters);
    out.f64(config.margin);
    out.f64(config.theta);
    out.f64(config.alpha_init);
    out.f64(config.alpha_step);
    out.f64(config.alpha_max);
    out.u64(config.seed);
    out.str(rng);
    return std::move(out).take();
  }

  static SecretKeyPair read(ByteReader& in) {
    in.expect(kMagic);
    if (auto v = in.u32(); v != kVersion) fail(ErrorCode::kFormat, "unsupported key version " + std::to_string(v));
    SecretKeyPair k;
    auto n = in.u64(), m = in.u64();
    k.layer = static_cast<std::size_t>(in.u64());
    k.alpha = in.f64();
    k.a = read_matrix(in);
    k.d = read_real_vector(in);
    if (k.a.rows() != n || k.a.cols() != m || k.d.size() != m) fail(ErrorCode::kFormat, "key dimensions disagree");
    auto td = in.raw(32);
    std::copy(td.begin(), td.end(), k.trigger_digest.begin());
    auto wc = in.raw(32);
    std::copy(wc.begin(), wc.end(), k.watermark_commitment.begin());
    k.config.lr = in.f64();
    k.config.max_iters = in.u32();
    k.config.margin = in.f64();
    k.config.theta = in.f64();
    k.config.alpha_init = in.f64();
    k.config.alpha_step = in.f64();
    k.config.alpha_max = in.f64();
    k.config.seed = in.u64();
    k.rng = in.str();
    return k;
  }

  static SecretKeyPair deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    auto k = read(in);
    in.expect_done();
    return k;
  }

  /// Content address: SHA-256 of the serialized pair.
  Digest key_id() const { return sha256(serialize()); }

  friend bool operator==(const SecretKeyPair&, const SecretKeyPair&) = default;
};

struct KeyGenOutcome {
  SecretKeyPair keys;
  RealVector mu;
  ActivationVector fbar;
  std::size_t iterations = 0;
  double min_margin = 0.0;
  Digest model_fingerprint{};
};

/// Key generation on a host model: sample mu ~ N(0, I_M), solve for A, pick
/// (d, alpha). The model is only read; its fingerprint is checked before and
/// after.
inline KeyGenOutcome generate_keys(const ModelCheckpoint& model, const TriggerSet& trigger, std::size_t layer,
                                   const WatermarkVector& b, const KeyGenConfig& cfg) {
  cfg.validate();
  Digest before = model.fingerprint();
  ActivationVector fbar = mean_activation(model, trigger, layer);

  Rng aux = Rng(cfg.seed).split(kAuxiliaryStream);
  RealVector mu = sample_gaussian_vector(aux, fbar.size());
  MatrixSolution sol = derive_matrix(b, mu, cfg);
  ScaledOffset offset = derive_d_and_alpha(sol.a, mu, fbar, b, cfg);

  KeyGenOutcome out;
  out.keys.a = std::move(sol.a);
  out.keys.d = std::move(offset.d);
  out.keys.alpha = offset.alpha;
  out.keys.layer = layer;
  out.keys.trigger_digest = trigger.digest;
  out.keys.watermark_commitment = b.commitment();
  out.keys.config = cfg;
  out.mu = std::move(mu);
  out.fbar = std::move(fbar);
  out.iterations = sol.iterations;
  out.min_margin = sol.min_margin;
  out.model_fingerprint = model.fingerprint();
  if (out.model_fingerprint != before) fail(ErrorCode::kIntegrityViolation, "host model changed during key generation");
  return out;
}

}  // namespace freemark

#endif  // FREEMARK_KEYGEN_HPP
