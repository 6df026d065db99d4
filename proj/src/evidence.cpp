#include "watz/evidence.hpp"

namespace watz::evidence {

crypto::Digest compute_anchor(const crypto::Point& g_a, const crypto::Point& g_v) {
  Bytes both;
  both.reserve(2 * crypto::kPointSize);
  append(both, g_a);
  append(both, g_v);
  return crypto::sha256(both);
}

ByteArray<kSerializedSize> serialize(const Evidence& evidence) {
  Bytes out;
  out.reserve(kSerializedSize);
  append(out, evidence.anchor);
  append_u32_be(out, evidence.version);
  append(out, evidence.claim);
  append(out, evidence.attestation_public_key);
  append(out, evidence.signature);
  return array_from<kSerializedSize>(out);
}

Evidence parse(ByteView bytes) {
  if (bytes.size() != kSerializedSize) {
    throw MalformedEvidence("evidence must be " + std::to_string(kSerializedSize) + " bytes, got " +
                            std::to_string(bytes.size()));
  }
  if (bytes[68] != 0x04) throw MalformedEvidence("attestation key is not SEC1 uncompressed");
  Evidence e;
  e.anchor = array_from<32>(bytes.subspan(0, 32));
  e.version = load_u32_be(bytes.subspan(32, 4));
  e.claim = array_from<32>(bytes.subspan(36, 32));
  e.attestation_public_key = array_from<65>(bytes.subspan(68, 65));
  e.signature = array_from<64>(bytes.subspan(133, 64));
  return e;
}

ByteView signed_region(ByteView serialized) {
  if (serialized.size() < kSignedRegionSize) throw MalformedEvidence("evidence shorter than its signed region");
  return serialized.first(kSignedRegionSize);
}

ByteArray<kSignedRegionSize> signed_bytes(const Evidence& evidence) {
  const auto full = serialize(evidence);
  return array_from<kSignedRegionSize>(signed_region(full));
}

bool verify_signature(const Evidence& evidence) {
  return crypto::ecdsa_verify(evidence.attestation_public_key, signed_bytes(evidence), evidence.signature);
}

std::string to_hex(const Evidence& evidence) { return watz::to_hex(serialize(evidence)); }

Evidence from_hex(std::string_view hex) {
  Bytes raw;
  try {
    raw = watz::from_hex(hex);
  } catch (const std::invalid_argument& e) {
    throw MalformedEvidence(e.what());
  }
  return parse(raw);
}

}  // namespace watz::evidence
