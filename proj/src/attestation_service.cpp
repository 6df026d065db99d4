#include "watz/attestation_service.hpp"

#include <cctype>
#include <cstdlib>

#include "watz/profile.hpp"

namespace watz::attestation {

RootOfTrust RootOfTrust::from_bytes(ByteView seed) {
  if (seed.size() != 32) {
    throw ConfigError("root-of-trust seed must be 32 bytes, got " + std::to_string(seed.size()));
  }
  return RootOfTrust(array_from<32>(seed));
}

RootOfTrust RootOfTrust::from_hex(std::string_view hex) {
  while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.front()))) hex.remove_prefix(1);
  while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.back()))) hex.remove_suffix(1);
  if (hex.size() != 64) throw ConfigError("root-of-trust seed must be 64 hex characters");
  Bytes raw;
  try {
    raw = watz::from_hex(hex);
  } catch (const std::invalid_argument&) {
    throw ConfigError("root-of-trust seed is not valid hex");
  }
  RootOfTrust root = from_bytes(raw);
  crypto::secure_wipe(raw.data(), raw.size());
  return root;
}

RootOfTrust RootOfTrust::from_file(const std::string& path) {
  Bytes raw;
  try {
    raw = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("seed file: ") + e.what());
  }
  const std::string text(raw.begin(), raw.end());
  crypto::secure_wipe(raw.data(), raw.size());
  return from_hex(text);
}

RootOfTrust RootOfTrust::from_env(const char* variable) {
  const char* value = std::getenv(variable);
  if (value == nullptr) throw ConfigError(std::string("environment variable ") + variable + " is not set");
  return from_hex(value);
}

AttestationService::AttestationService(const RootOfTrust& root, std::uint32_t version)
    : seed_(root.seed_), keypair_(crypto::derive_attestation_keypair(root.seed_.expose())), version_(version) {}

evidence::Evidence AttestationService::issue_evidence(const crypto::Digest& anchor, const crypto::Digest& claim) const {
  using profile::Category;
  evidence::Evidence ev;
  {
    profile::Span span(profile::Party::attester, profile::Message::msg2, Category::memory);
    ev.anchor = anchor;
    ev.version = version_;
    ev.claim = claim;
    ev.attestation_public_key = keypair_.public_point;
  }
  const auto region = evidence::signed_bytes(ev);
  profile::Span span(profile::Party::attester, profile::Message::msg2, Category::asymmetric);
  ev.signature = crypto::ecdsa_sign(keypair_.private_scalar, region);
  return ev;
}

evidence::Evidence AttestationService::issue_evidence(ByteView anchor, ByteView claim) const {
  if (anchor.size() != crypto::kDigestSize || claim.size() != crypto::kDigestSize) {
    throw std::invalid_argument("anchor and claim must be 32 bytes");
  }
  return issue_evidence(array_from<32>(anchor), array_from<32>(claim));
}

}  // namespace watz::attestation
