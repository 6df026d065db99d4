#pragma once

// Verifier side: appraisal policy plus the server half of the protocol.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "watz/crypto.hpp"
#include "watz/evidence.hpp"
#include "watz/wire.hpp"

namespace watz::verifier {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest blob that still fits a msg3 frame (iv and tag ride along).
inline constexpr std::size_t kMaxSecretBlob = wire::kMaxPayload - crypto::kIvSize - crypto::kTagSize;

struct VerifierConfig {
  crypto::IdentityKeyPair identity;
  std::set<crypto::Point> endorsements;
  std::set<crypto::Digest> reference_values;
  std::uint32_t min_version = evidence::kCurrentVersion;
  Bytes secret_blob;
  std::string listen_address = "127.0.0.1:7700";

  /// Throws ConfigError when the verifier could not serve with this config.
  void validate() const;
};

/// JSON config file:
///   identity_private_key  64 hex chars
///   endorsements          [130 hex chars, ...]
///   reference_values      [64 hex chars, ...]
///   min_version           integer
///   secret_blob_file      path, relative to the config file's directory
///   listen_address        "host:port"
VerifierConfig load_config(const std::filesystem::path& path);
VerifierConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);

enum class Phase { await_msg0, await_msg2, provisioned, failed };

enum class Reason {
  mac_mismatch,
  ga_mismatch,
  anchor_mismatch,
  unendorsed_device,
  bad_evidence_signature,
  stale_version,
  unknown_claim,
};

const char* to_string(Phase phase) noexcept;
const char* to_string(Reason reason) noexcept;

struct AppraisalVerdict {
  bool accepted = false;
  std::optional<Reason> reason;
  crypto::Digest claim{};
};

enum class VerifierErrc { invalid_point, malformed_evidence, wrong_phase };

class VerifierError : public std::runtime_error {
 public:
  VerifierError(VerifierErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  VerifierErrc code() const noexcept { return code_; }

 private:
  VerifierErrc code_;
};

class VerifierSession {
 public:
  explicit VerifierSession(std::shared_ptr<const VerifierConfig> config,
                           crypto::EntropySource& entropy = crypto::system_entropy());

  /// Generates (v, G_v), derives the session keys and answers with
  /// G_v | V | SIGN_V(G_v | G_a) | MAC.
  wire::Msg1Payload handle_msg0(const wire::Msg0Payload& msg);

  /// Checks in fixed order, first failure wins: MAC, G_a, anchor,
  /// endorsement, evidence signature, version, claim.
  AppraisalVerdict appraise_msg2(const wire::Msg2Payload& msg);

  /// Only after an accepted appraisal.
  wire::Msg3Payload build_msg3();

  Phase phase() const noexcept { return phase_; }
  const std::optional<crypto::Point>& g_v() const noexcept { return g_v_; }
  const std::optional<crypto::Point>& peer_g_a() const noexcept { return peer_g_a_; }
  const std::optional<crypto::SessionKeys>& session_keys() const noexcept { return keys_; }

 private:
  void require(Phase expected) const;
  AppraisalVerdict reject(Reason reason, const crypto::Digest& claim);

  std::shared_ptr<const VerifierConfig> config_;
  crypto::EntropySource* entropy_;
  Phase phase_ = Phase::await_msg0;
  std::optional<crypto::SessionKeyPair> keypair_;
  std::optional<crypto::Point> g_v_;
  std::optional<crypto::Point> peer_g_a_;
  std::optional<crypto::SessionKeys> keys_;
};

}  // namespace watz::verifier
