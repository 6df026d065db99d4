#include "watz/verifier.hpp"

#include "watz/profile.hpp"

namespace watz::verifier {

using profile::Category;
using profile::Message;
using profile::Party;

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::await_msg0:
      return "await-msg0";
    case Phase::await_msg2:
      return "await-msg2";
    case Phase::provisioned:
      return "provisioned";
    case Phase::failed:
      return "failed";
  }
  return "?";
}

const char* to_string(Reason reason) noexcept {
  switch (reason) {
    case Reason::mac_mismatch:
      return "mac-mismatch";
    case Reason::ga_mismatch:
      return "ga-mismatch";
    case Reason::anchor_mismatch:
      return "anchor-mismatch";
    case Reason::unendorsed_device:
      return "unendorsed-device";
    case Reason::bad_evidence_signature:
      return "bad-evidence-signature";
    case Reason::stale_version:
      return "stale-version";
    case Reason::unknown_claim:
      return "unknown-claim";
  }
  return "?";
}

void VerifierConfig::validate() const {
  if (!crypto::is_valid_scalar(identity.private_scalar.expose())) {
    throw ConfigError("identity private key is not a valid P-256 scalar");
  }
  if (crypto::public_from_scalar(identity.private_scalar) != identity.public_point) {
    throw ConfigError("identity public key does not match its private key");
  }
  if (endorsements.empty()) throw ConfigError("no endorsed attestation keys");
  if (reference_values.empty()) throw ConfigError("no reference values");
  for (const auto& key : endorsements) {
    if (!crypto::is_valid_point(key)) throw ConfigError("endorsement " + to_hex(key) + " is not a P-256 point");
  }
  if (secret_blob.size() > kMaxSecretBlob) throw ConfigError("secret blob does not fit in one msg3 frame");
}

VerifierSession::VerifierSession(std::shared_ptr<const VerifierConfig> config, crypto::EntropySource& entropy)
    : config_(std::move(config)), entropy_(&entropy) {}

void VerifierSession::require(Phase expected) const {
  if (phase_ != expected) {
    throw VerifierError(VerifierErrc::wrong_phase,
                        std::string("session is ") + to_string(phase_) + ", expected " + to_string(expected));
  }
}

wire::Msg1Payload VerifierSession::handle_msg0(const wire::Msg0Payload& msg) {
  require(Phase::await_msg0);

  crypto::SessionKeyPair keypair;
  crypto::SessionKeys keys;
  {
    profile::Span span(Party::verifier, Message::msg0, Category::key_generation);
    if (!crypto::is_valid_point(msg.g_a)) {
      phase_ = Phase::failed;
      throw VerifierError(VerifierErrc::invalid_point, "G_a is not a valid P-256 point");
    }
    keypair = crypto::gen_session_keypair(*entropy_);
    keys = crypto::derive_session_keys(crypto::ecdh_shared_secret(keypair.private_scalar, msg.g_a));
  }

  wire::Msg1Payload reply;
  Bytes signed_keys;
  {
    profile::Span span(Party::verifier, Message::msg1, Category::memory);
    reply.g_v = keypair.public_point;
    reply.v_identity = config_->identity.public_point;
    signed_keys.reserve(2 * crypto::kPointSize);
    append(signed_keys, keypair.public_point);
    append(signed_keys, msg.g_a);
  }
  {
    profile::Span span(Party::verifier, Message::msg1, Category::asymmetric);
    reply.signature = crypto::ecdsa_sign(config_->identity.private_scalar, signed_keys);
  }
  Bytes content;
  {
    profile::Span span(Party::verifier, Message::msg1, Category::memory);
    content = wire::msg1_content(reply);
  }
  {
    profile::Span span(Party::verifier, Message::msg1, Category::symmetric);
    reply.mac = crypto::cmac(keys.km.expose(), content);
  }

  g_v_ = keypair.public_point;
  keypair_ = std::move(keypair);
  peer_g_a_ = msg.g_a;
  keys_ = std::move(keys);
  phase_ = Phase::await_msg2;
  return reply;
}

AppraisalVerdict VerifierSession::reject(Reason reason, const crypto::Digest& claim) {
  phase_ = Phase::failed;
  keys_.reset();
  return AppraisalVerdict{false, reason, claim};
}

AppraisalVerdict VerifierSession::appraise_msg2(const wire::Msg2Payload& msg) {
  require(Phase::await_msg2);

  evidence::Evidence ev;
  Bytes content;
  {
    profile::Span span(Party::verifier, Message::msg2, Category::memory);
    try {
      ev = evidence::parse(msg.evidence);
    } catch (const evidence::MalformedEvidence& e) {
      phase_ = Phase::failed;
      keys_.reset();
      throw VerifierError(VerifierErrc::malformed_evidence, e.what());
    }
    content = wire::msg2_content(msg);
  }

  {
    profile::Span span(Party::verifier, Message::msg2, Category::symmetric);
    if (!equal_ct(crypto::cmac(keys_->km.expose(), content), msg.mac)) return reject(Reason::mac_mismatch, ev.claim);
  }
  if (msg.g_a != *peer_g_a_) return reject(Reason::ga_mismatch, ev.claim);
  {
    profile::Span span(Party::verifier, Message::msg2, Category::symmetric);
    if (!equal_ct(evidence::compute_anchor(msg.g_a, *g_v_), ev.anchor)) {
      return reject(Reason::anchor_mismatch, ev.claim);
    }
  }
  if (!config_->endorsements.contains(ev.attestation_public_key)) return reject(Reason::unendorsed_device, ev.claim);
  {
    profile::Span span(Party::verifier, Message::msg2, Category::asymmetric);
    if (msg.signature != ev.signature || !evidence::verify_signature(ev)) {
      return reject(Reason::bad_evidence_signature, ev.claim);
    }
  }
  if (ev.version < config_->min_version) return reject(Reason::stale_version, ev.claim);
  if (!config_->reference_values.contains(ev.claim)) return reject(Reason::unknown_claim, ev.claim);

  phase_ = Phase::provisioned;
  return AppraisalVerdict{true, std::nullopt, ev.claim};
}

wire::Msg3Payload VerifierSession::build_msg3() {
  require(Phase::provisioned);
  if (!keys_) throw VerifierError(VerifierErrc::wrong_phase, "msg3 already sent");
  profile::Span span(Party::verifier, Message::msg3, Category::symmetric);
  wire::Msg3Payload msg;
  entropy_->fill(msg.iv);
  msg.ciphertext_and_tag = crypto::aead_encrypt(keys_->ke.expose(), msg.iv, config_->secret_blob);
  // One msg3 per session: the iv must never repeat under this Ke.
  keys_.reset();
  return msg;
}

}  // namespace watz::verifier
