#include "watz/attester.hpp"

#include "watz/profile.hpp"

namespace watz::attester {

using profile::Category;
using profile::Message;
using profile::Party;

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::started:
      return "started";
    case Phase::handshake_done:
      return "handshake-done";
    case Phase::quote_sent:
      return "quote-sent";
    case Phase::completed:
      return "completed";
    case Phase::failed:
      return "failed";
  }
  return "?";
}

const char* to_string(AttesterErrc code) noexcept {
  switch (code) {
    case AttesterErrc::invalid_verifier_key:
      return "invalid-verifier-key";
    case AttesterErrc::invalid_point:
      return "invalid-point";
    case AttesterErrc::mac_mismatch:
      return "mac-mismatch";
    case AttesterErrc::identity_mismatch:
      return "identity-mismatch";
    case AttesterErrc::signature_invalid:
      return "signature-invalid";
    case AttesterErrc::anchor_mismatch:
      return "anchor-mismatch";
    case AttesterErrc::decryption_error:
      return "decryption-error";
    case AttesterErrc::wrong_phase:
      return "wrong-phase";
  }
  return "?";
}

std::pair<AttesterSession, wire::Msg0Payload> AttesterSession::start(const crypto::Point& expected_verifier_key,
                                                                     crypto::EntropySource& entropy) {
  if (!crypto::is_valid_point(expected_verifier_key)) {
    throw AttesterError(AttesterErrc::invalid_verifier_key, "pinned verifier key is not a P-256 point");
  }
  crypto::SessionKeyPair keypair;
  {
    profile::Span span(Party::attester, Message::msg0, Category::key_generation);
    keypair = crypto::gen_session_keypair(entropy);
  }
  profile::Span span(Party::attester, Message::msg0, Category::memory);
  wire::Msg0Payload msg0{keypair.public_point};
  return {AttesterSession(std::move(keypair), expected_verifier_key), msg0};
}

void AttesterSession::require(Phase expected) const {
  if (phase_ != expected) {
    throw AttesterError(AttesterErrc::wrong_phase,
                        std::string("session is ") + to_string(phase_) + ", expected " + to_string(expected));
  }
}

void AttesterSession::fail(AttesterErrc code, const std::string& detail) {
  phase_ = Phase::failed;
  keys_.reset();
  throw detail.empty() ? AttesterError(code) : AttesterError(code, detail);
}

crypto::Digest AttesterSession::handle_msg1(const wire::Msg1Payload& msg) {
  require(Phase::started);

  crypto::SessionKeys keys;
  try {
    profile::Span span(Party::attester, Message::msg1, Category::key_generation);
    keys = crypto::derive_session_keys(crypto::ecdh_shared_secret(keypair_.private_scalar, msg.g_v));
  } catch (const crypto::CryptoError& e) {
    fail(AttesterErrc::invalid_point, e.what());
  }

  Bytes content;
  {
    profile::Span span(Party::attester, Message::msg1, Category::memory);
    content = wire::msg1_content(msg);
  }
  bool mac_ok = false;
  {
    profile::Span span(Party::attester, Message::msg1, Category::symmetric);
    mac_ok = equal_ct(crypto::cmac(keys.km.expose(), content), msg.mac);
  }
  if (!mac_ok) fail(AttesterErrc::mac_mismatch);

  if (!equal_ct(msg.v_identity, expected_verifier_key_)) fail(AttesterErrc::identity_mismatch);

  bool sig_ok = false;
  {
    Bytes signed_keys;
    {
      profile::Span span(Party::attester, Message::msg1, Category::memory);
      signed_keys.reserve(2 * crypto::kPointSize);
      append(signed_keys, msg.g_v);
      append(signed_keys, keypair_.public_point);
    }
    profile::Span span(Party::attester, Message::msg1, Category::asymmetric);
    sig_ok = crypto::ecdsa_verify(msg.v_identity, signed_keys, msg.signature);
  }
  if (!sig_ok) fail(AttesterErrc::signature_invalid);

  crypto::Digest anchor;
  {
    profile::Span span(Party::attester, Message::msg1, Category::symmetric);
    anchor = evidence::compute_anchor(keypair_.public_point, msg.g_v);
  }
  peer_g_v_ = msg.g_v;
  keys_ = std::move(keys);
  anchor_ = anchor;
  phase_ = Phase::handshake_done;
  return anchor;
}

wire::Msg2Payload AttesterSession::build_msg2(const evidence::Evidence& ev) {
  require(Phase::handshake_done);
  if (!equal_ct(ev.anchor, *anchor_)) {
    throw AttesterError(AttesterErrc::anchor_mismatch, "evidence was issued for a different anchor");
  }

  wire::Msg2Payload msg;
  Bytes content;
  {
    profile::Span span(Party::attester, Message::msg2, Category::memory);
    const auto serialized = evidence::serialize(ev);
    msg.g_a = keypair_.public_point;
    msg.evidence.assign(serialized.begin(), serialized.end());
    msg.signature = ev.signature;
    content = wire::msg2_content(msg);
  }
  {
    profile::Span span(Party::attester, Message::msg2, Category::symmetric);
    msg.mac = crypto::cmac(keys_->km.expose(), content);
  }
  phase_ = Phase::quote_sent;
  return msg;
}

Bytes AttesterSession::handle_msg3(const wire::Msg3Payload& msg) {
  require(Phase::quote_sent);
  std::optional<Bytes> blob;
  {
    profile::Span span(Party::attester, Message::msg3, Category::symmetric);
    blob = crypto::aead_decrypt(keys_->ke.expose(), msg.iv, msg.ciphertext_and_tag);
  }
  if (!blob) fail(AttesterErrc::decryption_error);
  phase_ = Phase::completed;
  return std::move(*blob);
}

}  // namespace watz::attester
