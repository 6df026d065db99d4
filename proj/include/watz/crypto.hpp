#pragma once

// P-256 / AES-128 / SHA-256 primitives used by the attestation protocol.
//
// Points are 65-byte uncompressed SEC1 encodings (0x04 || X || Y), scalars
// and signature halves are 32-byte big-endian integers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "watz/bytes.hpp"

namespace watz::crypto {

inline constexpr std::size_t kPointSize = 65;
inline constexpr std::size_t kScalarSize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kKeySize = 16;
inline constexpr std::size_t kMacSize = 16;
inline constexpr std::size_t kIvSize = 12;
inline constexpr std::size_t kTagSize = 16;

using Point = ByteArray<kPointSize>;
using Signature = ByteArray<kSignatureSize>;
using Digest = ByteArray<kDigestSize>;
using AesKey = ByteArray<kKeySize>;
using MacTag = ByteArray<kMacSize>;
using Iv = ByteArray<kIvSize>;

enum class CryptoErrc {
  invalid_point,
  invalid_scalar,
  entropy_failure,
  derivation_failure,
  internal,
};

class CryptoError : public std::runtime_error {
 public:
  CryptoError(CryptoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CryptoErrc code() const noexcept { return code_; }

 private:
  CryptoErrc code_;
};

/// Zeroes memory in a way the optimizer cannot elide.
void secure_wipe(void* p, std::size_t n);

/// Fixed-size secret buffer; wiped on destruction and never printable.
template <std::size_t N>
class Secret {
 public:
  Secret() = default;
  explicit Secret(const ByteArray<N>& bytes) : bytes_(bytes) {}
  Secret(const Secret&) = default;
  Secret& operator=(const Secret&) = default;
  ~Secret() { secure_wipe(bytes_.data(), N); }

  const ByteArray<N>& expose() const noexcept { return bytes_; }
  ByteArray<N>& expose() noexcept { return bytes_; }

  friend bool operator==(const Secret& a, const Secret& b) { return equal_ct(a.bytes_, b.bytes_); }

 private:
  ByteArray<N> bytes_{};
};

using Scalar = Secret<kScalarSize>;

struct EcKeyPair {
  Scalar private_scalar;
  Point public_point{};
};

/// Ephemeral ECDHE pair (a, G_a) or (v, G_v).
struct SessionKeyPair : EcKeyPair {};
/// Device key A, derived from the root-of-trust seed.
struct AttestationKeyPair : EcKeyPair {};
/// Long-term verifier identity V.
struct IdentityKeyPair : EcKeyPair {};

/// x-coordinate of the ECDH point, big-endian.
struct SharedSecret {
  Secret<kDigestSize> x_coordinate;
};

struct SessionKeys {
  Secret<kKeySize> kdk;
  Secret<kKeySize> km;
  Secret<kKeySize> ke;
};

/// Source of cryptographically secure random bytes. Implementations must be
/// safe to share between threads.
class EntropySource {
 public:
  virtual ~EntropySource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;
};

/// OpenSSL DRBG (seeded from the OS).
EntropySource& system_entropy();

// --- hashing / MAC -------------------------------------------------------

Digest sha256(ByteView message);
MacTag cmac(const AesKey& key, ByteView message);
ByteArray<32> hmac_sha256(ByteView key, ByteView message);

// --- P-256 ---------------------------------------------------------------

/// On-curve, not the identity, 0x04 prefix.
bool is_valid_point(const Point& point);

/// Scalar must lie in [1, n-1]; throws CryptoError(invalid_scalar) otherwise.
Point public_from_scalar(const Scalar& scalar);
bool is_valid_scalar(const ByteArray<kScalarSize>& scalar);

SessionKeyPair gen_session_keypair(EntropySource& entropy = system_entropy());
IdentityKeyPair gen_identity_keypair(EntropySource& entropy = system_entropy());
/// Test hook: builds a session pair from a fixed scalar.
SessionKeyPair session_keypair_from_scalar(const Scalar& scalar);

/// Throws CryptoError(invalid_point) for off-curve or identity peer points.
SharedSecret ecdh_shared_secret(const Scalar& private_scalar, const Point& peer_public_point);

/// KDK = CMAC(0^128, x little-endian); Km/Ke = CMAC(KDK, 01 || "SMK"/"SK" || 00 || 80 00).
SessionKeys derive_session_keys(const SharedSecret& shared);

/// SHA-256 counter chain with rejection sampling over a domain-separated subkey.
AttestationKeyPair derive_attestation_keypair(const ByteArray<32>& seed);

// --- ECDSA (SHA-256, RFC 6979 nonces) --------------------------------------

/// RFC 6979 signature exactly as the RFC computes it (no s normalization).
Signature ecdsa_sign_raw(const Scalar& private_scalar, ByteView message);
/// Canonical signature: RFC 6979 nonce, s folded into the low half of the order.
Signature ecdsa_sign(const Scalar& private_scalar, ByteView message);
/// Accepts only low-s signatures that verify under the key; never throws.
bool ecdsa_verify(const Point& public_point, ByteView message, const Signature& signature);

/// Converts a low-s signature into its high-s twin (and back). Test support.
Signature flip_s(const Signature& signature);

// --- AES-128-GCM, empty associated data -----------------------------------

Bytes aead_encrypt(const AesKey& key, const Iv& iv, ByteView plaintext);
/// nullopt on authentication failure or input shorter than the tag.
std::optional<Bytes> aead_decrypt(const AesKey& key, const Iv& iv, ByteView ciphertext_and_tag);

}  // namespace watz::crypto
