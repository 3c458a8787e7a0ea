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

#ifndef FREEMARK_REGISTRY_HPP
#define FREEMARK_REGISTRY_HPP

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freemark/binary_io.hpp"
#include "freemark/error.hpp"
#include "freemark/extract.hpp"
#include "freemark/host_model.hpp"
#include "freemark/keygen.hpp"
#include "freemark/sha256.hpp"

namespace freemark {

/// One escrowed key: the key pair, the trigger set needed to extract with it,
/// and informational metadata. The watermark itself is never stored, only its
/// commitment inside the key pair.
struct KeyRecord {
  static constexpr std::string_view kMagic = "FMRC";
  static constexpr std::uint32_t kVersion = 1;

  std::string owner_label;
  std::int64_t created_at = 0;  // unix seconds, not part of the key id
  SecretKeyPair keys;
  TriggerSet trigger;

  std::string key_id() const { return to_hex(keys.key_id()); }
  const Digest& watermark_commitment() const { return keys.watermark_commitment; }

  void validate() const {
    require(trigger.digest == keys.trigger_digest, ErrorCode::kInvalidArgument,
            "record trigger set does not match the digest bound to the keys");
    require(trigger.digest == TriggerSet::digest_of(trigger.features), ErrorCode::kInvalidArgument,
            "record trigger digest is stale");
  }

  /// "FMRC" | u32 version | blob(keys) | blob(trigger) | str(owner) |
  /// u64(created_at) | sha256 of all preceding bytes
  Bytes serialize() const {
    ByteWriter out;
    out.raw(kMagic);
    out.u32(kVersion);
    out.blob(keys.serialize());
    ByteWriter t;
    write(t, trigger);
    out.blob(t.bytes());
    out.str(owner_label);
    out.u64(static_cast<std::uint64_t>(created_at));
    out.raw(sha256(out.bytes()));
    return std::move(out).take();
  }

  static KeyRecord deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 32) fail(ErrorCode::kFormat, "record too short");
    auto body = bytes.first(bytes.size() - 32);
    auto trailer = bytes.last(32);
    Digest expected = sha256(body);
    if (!std::equal(expected.begin(), expected.end(), trailer.begin()))
      fail(ErrorCode::kIntegrityViolation, "record checksum mismatch");
    ByteReader in(body);
    in.expect(kMagic);
    if (auto v = in.u32(); v != kVersion) fail(ErrorCode::kFormat, "unsupported record version " + std::to_string(v));
    KeyRecord r;
    r.keys = SecretKeyPair::deserialize(in.blob());
    ByteReader t(in.blob());
    r.trigger = read_trigger_set(t);
    t.expect_done();
    r.owner_label = in.str();
    r.created_at = static_cast<std::int64_t>(in.u64());
    in.expect_done();
    return r;
  }
};

/// File-backed key escrow:
///   <root>/index.json            summary of every record, keyed by key id
///   <root>/records/<key-id>.bin  KeyRecord binary
///   <root>/.lock                 advisory writer lock
class KeyStore {
 public:
  explicit KeyStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "records", ec);
    if (ec) fail(ErrorCode::kIo, "cannot create store at " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path record_path(const std::string& key_id) const {
    check_id(key_id);
    return root_ / "records" / (key_id + ".bin");
  }

  /// Idempotent: registering a key pair that is already stored returns its id
  /// and leaves the existing record untouched.
  std::string register_record(const KeyRecord& record) {
    record.validate();
    WriterLock lock(root_ / ".lock");
    std::string id = record.key_id();
    auto path = record_path(id);
    if (std::filesystem::exists(path)) return id;
    write_file_atomic(path, record.serialize());

    nlohmann::json index = load_index();
    index["records"][id] = {{"owner", record.owner_label},
                            {"created_at", record.created_at},
                            {"bits", record.keys.bits()},
                            {"width", record.keys.width()},
                            {"layer", record.keys.layer},
                            {"trigger_digest", to_hex(record.keys.trigger_digest)},
                            {"watermark_commitment", to_hex(record.keys.watermark_commitment)}};
    write_file_atomic(root_ / "index.json", index.dump(2) + "\n");
    return id;
  }

  KeyRecord fetch(const std::string& key_id) const {
    auto path = record_path(key_id);
    if (!std::filesystem::exists(path)) fail(ErrorCode::kNotFound, "no record with key id " + key_id);
    KeyRecord r;
    try {
      r = KeyRecord::deserialize(read_file(path));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIo) throw;
      fail(ErrorCode::kIntegrityViolation, "record " + key_id + " is corrupt (" + e.what() + ")");
    }
    if (r.key_id() != key_id) fail(ErrorCode::kIntegrityViolation, "record " + key_id + " hashes to " + r.key_id());
    if (r.trigger.digest != r.keys.trigger_digest)
      fail(ErrorCode::kIntegrityViolation, "record " + key_id + " trigger set does not match its keys");
    return r;
  }

  std::vector<std::string> list() const {
    std::vector<std::string> ids;
    auto index = load_index();
    for (const auto& [id, _] : index["records"].items()) ids.push_back(id);
    return ids;
  }

  /// Extracts with the escrowed keys and trigger set and scores the claimed
  /// watermark. The claim is rejected before extraction unless its hash
  /// matches the commitment recorded at registration.
  BerReport verify_claim(const std::string& key_id, const ModelCheckpoint& suspect, const WatermarkVector& claimed,
                         double theta) const {
    KeyRecord r = fetch(key_id);
    if (claimed.commitment() != r.watermark_commitment())
      fail(ErrorCode::kClaimRejected, "claimed watermark does not match the registered commitment");
    BerReport report = verify(claimed, extract(suspect, r.trigger, r.keys), theta);
    report.key_id = key_id;
    report.suspect_fingerprint = to_hex(suspect.fingerprint());
    return report;
  }

 private:
  class WriterLock {
   public:
    explicit WriterLock(const std::filesystem::path& path) {
      fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
      if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) fail(ErrorCode::kIo, "cannot lock " + path.string());
    }
    ~WriterLock() {
      if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
      }
    }
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

   private:
    int fd_ = -1;
  };

  static void check_id(const std::string& id) {
    bool ok = id.size() == 64 && std::all_of(id.begin(), id.end(), [](char c) {
                return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
              });
    if (!ok) fail(ErrorCode::kNotFound, "malformed key id '" + id + "'");
  }

  nlohmann::json load_index() const {
    auto path = root_ / "index.json";
    if (!std::filesystem::exists(path)) return {{"version", 1}, {"records", nlohmann::json::object()}};
    auto bytes = read_file(path);
    auto index = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (index.is_discarded() || !index.contains("records")) fail(ErrorCode::kIntegrityViolation, "index.json is corrupt");
    return index;
  }

  std::filesystem::path root_;
};

}  // namespace freemark

#endif  // FREEMARK_REGISTRY_HPP
