#pragma once

// Attester side of the four-message protocol.
//
//   Started --msg1--> HandshakeDone --msg2--> QuoteSent --msg3--> Completed
//
// Any failed check moves the session to Failed; calling an operation in the
// wrong phase throws without touching the session.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "watz/crypto.hpp"
#include "watz/evidence.hpp"
#include "watz/wire.hpp"

namespace watz::attester {

enum class Phase { started, handshake_done, quote_sent, completed, failed };

enum class AttesterErrc {
  invalid_verifier_key,
  invalid_point,
  mac_mismatch,
  identity_mismatch,
  signature_invalid,
  anchor_mismatch,
  decryption_error,
  wrong_phase,
};

const char* to_string(Phase phase) noexcept;
const char* to_string(AttesterErrc code) noexcept;

class AttesterError : public std::runtime_error {
 public:
  explicit AttesterError(AttesterErrc code) : std::runtime_error(to_string(code)), code_(code) {}
  AttesterError(AttesterErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  AttesterErrc code() const noexcept { return code_; }

 private:
  AttesterErrc code_;
};

class AttesterSession {
 public:
  /// Generates (a, G_a). Throws AttesterError(invalid_verifier_key) when the
  /// pinned verifier identity is not a valid P-256 point.
  static std::pair<AttesterSession, wire::Msg0Payload> start(
      const crypto::Point& expected_verifier_key, crypto::EntropySource& entropy = crypto::system_entropy());

  /// Derives the session keys from G_v, then checks in order: MAC, pinned
  /// identity, signature over G_v | G_a. Returns the anchor.
  crypto::Digest handle_msg1(const wire::Msg1Payload& msg);

  /// G_a | evidence | SIGN_A(evidence) | MAC. The evidence must carry this
  /// session's anchor.
  wire::Msg2Payload build_msg2(const evidence::Evidence& evidence);

  /// Decrypts the secret blob.
  Bytes handle_msg3(const wire::Msg3Payload& msg);

  Phase phase() const noexcept { return phase_; }
  const crypto::Point& g_a() const noexcept { return keypair_.public_point; }
  const std::optional<crypto::Point>& peer_g_v() const noexcept { return peer_g_v_; }
  const std::optional<crypto::Digest>& anchor() const noexcept { return anchor_; }
  const std::optional<crypto::SessionKeys>& session_keys() const noexcept { return keys_; }
  const crypto::Point& expected_verifier_key() const noexcept { return expected_verifier_key_; }

 private:
  AttesterSession(crypto::SessionKeyPair keypair, const crypto::Point& expected_verifier_key)
      : keypair_(std::move(keypair)), expected_verifier_key_(expected_verifier_key) {}

  void require(Phase expected) const;
  [[noreturn]] void fail(AttesterErrc code, const std::string& detail = {});

  Phase phase_ = Phase::started;
  crypto::SessionKeyPair keypair_;
  crypto::Point expected_verifier_key_;
  std::optional<crypto::Point> peer_g_v_;
  std::optional<crypto::SessionKeys> keys_;
  std::optional<crypto::Digest> anchor_;
};

}  // namespace watz::attester
