#pragma once

// Stand-in for the trusted-kernel attestation service: the only owner of the
// root-of-trust seed and of the attestation private key.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "watz/bytes.hpp"
#include "watz/crypto.hpp"
#include "watz/evidence.hpp"

namespace watz::attestation {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 32-byte device secret. Only AttestationService can read it.
class RootOfTrust {
 public:
  /// Throws ConfigError unless `seed` is exactly 32 bytes.
  static RootOfTrust from_bytes(ByteView seed);
  /// 64 hex characters, surrounding whitespace ignored.
  static RootOfTrust from_hex(std::string_view hex);
  static RootOfTrust from_file(const std::string& path);
  static RootOfTrust from_env(const char* variable);

 private:
  friend class AttestationService;
  explicit RootOfTrust(const ByteArray<32>& seed) : seed_(seed) {}
  crypto::Secret<32> seed_;
};

class AttestationService {
 public:
  explicit AttestationService(const RootOfTrust& root, std::uint32_t version = evidence::kCurrentVersion);

  AttestationService(const AttestationService&) = delete;
  AttestationService& operator=(const AttestationService&) = delete;

  const crypto::Point& public_attestation_key() const noexcept { return keypair_.public_point; }
  std::uint32_t version() const noexcept { return version_; }

  /// Signs anchor | version | claim | A. Thread-safe; the state is immutable.
  evidence::Evidence issue_evidence(const crypto::Digest& anchor, const crypto::Digest& claim) const;
  /// Length-checked overload for untyped callers.
  evidence::Evidence issue_evidence(ByteView anchor, ByteView claim) const;

 private:
  const crypto::Secret<32> seed_;
  const crypto::AttestationKeyPair keypair_;
  const std::uint32_t version_;
};

}  // namespace watz::attestation
