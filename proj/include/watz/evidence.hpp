#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "watz/bytes.hpp"
#include "watz/crypto.hpp"

namespace watz::evidence {

/// anchor(32) | version:u32be | claim(32) | A(65) | signature(64)
inline constexpr std::size_t kSerializedSize = 197;
/// The signature covers everything before it.
inline constexpr std::size_t kSignedRegionSize = 133;
inline constexpr std::uint32_t kCurrentVersion = 1;

struct Evidence {
  crypto::Digest anchor{};
  std::uint32_t version = kCurrentVersion;
  crypto::Digest claim{};
  crypto::Point attestation_public_key{};
  crypto::Signature signature{};

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

class MalformedEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SHA-256(G_a | G_v); binds evidence to one handshake.
crypto::Digest compute_anchor(const crypto::Point& g_a, const crypto::Point& g_v);

ByteArray<kSerializedSize> serialize(const Evidence& evidence);
Evidence parse(ByteView bytes);

/// Bytes [0, 133) of a serialized evidence.
ByteView signed_region(ByteView serialized);
/// The signed region of `evidence`, serialized.
ByteArray<kSignedRegionSize> signed_bytes(const Evidence& evidence);

/// Signature check of the embedded signature under the embedded key.
bool verify_signature(const Evidence& evidence);

/// Lowercase hex of the serialized form.
std::string to_hex(const Evidence& evidence);
Evidence from_hex(std::string_view hex);

}  // namespace watz::evidence
