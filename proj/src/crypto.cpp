#include "watz/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/params.h>
#include <openssl/rand.h>

#include <memory>
#include <string_view>

namespace watz::crypto {

void secure_wipe(void* p, std::size_t n) { OPENSSL_cleanse(p, n); }

namespace {

struct BnFree {
  void operator()(BIGNUM* p) const { BN_clear_free(p); }
};
struct BnCtxFree {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct PointFree {
  void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); }
};
struct GroupFree {
  void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct MacCtxFree {
  void operator()(EVP_MAC_CTX* p) const { EVP_MAC_CTX_free(p); }
};

using BnPtr = std::unique_ptr<BIGNUM, BnFree>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxFree>;
using PointPtr = std::unique_ptr<EC_POINT, PointFree>;
using MacCtxPtr = std::unique_ptr<EVP_MAC_CTX, MacCtxFree>;

[[noreturn]] void fail(const char* what) { throw CryptoError(CryptoErrc::internal, what); }

template <class T>
T* check(T* p, const char* what) {
  if (p == nullptr) fail(what);
  return p;
}

void check(int rc, const char* what) {
  if (rc != 1) fail(what);
}

// Curve parameters are immutable after construction and shared by all threads.
struct Curve {
  std::unique_ptr<EC_GROUP, GroupFree> group;
  BnPtr order;
  BnPtr half_order;

  Curve()
      : group(check(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1), "EC_GROUP_new_by_curve_name")),
        order(check(BN_dup(EC_GROUP_get0_order(group.get())), "BN_dup")),
        half_order(check(BN_new(), "BN_new")) {
    check(BN_rshift1(half_order.get(), order.get()), "BN_rshift1");
  }
};

const Curve& curve() {
  static const Curve instance;
  return instance;
}

BnPtr bn_new() { return BnPtr(check(BN_new(), "BN_new")); }

BnCtxPtr bn_ctx() { return BnCtxPtr(check(BN_CTX_new(), "BN_CTX_new")); }

BnPtr bn_from(ByteView bytes) {
  return BnPtr(check(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr), "BN_bin2bn"));
}

template <std::size_t N>
ByteArray<N> bn_to(const BIGNUM* bn) {
  ByteArray<N> out{};
  if (BN_bn2binpad(bn, out.data(), static_cast<int>(N)) != static_cast<int>(N)) fail("BN_bn2binpad");
  return out;
}

bool scalar_in_range(const BIGNUM* k) {
  return !BN_is_zero(k) && !BN_is_negative(k) && BN_cmp(k, curve().order.get()) < 0;
}

PointPtr point_new() { return PointPtr(check(EC_POINT_new(curve().group.get()), "EC_POINT_new")); }

/// nullptr when the encoding is not a valid, finite P-256 point.
PointPtr decode_point(const Point& encoded, BN_CTX* ctx) {
  if (encoded[0] != 0x04) return nullptr;
  PointPtr p = point_new();
  if (EC_POINT_oct2point(curve().group.get(), p.get(), encoded.data(), encoded.size(), ctx) != 1) {
    return nullptr;
  }
  if (EC_POINT_is_at_infinity(curve().group.get(), p.get()) == 1) return nullptr;
  if (EC_POINT_is_on_curve(curve().group.get(), p.get(), ctx) != 1) return nullptr;
  return p;
}

Point encode_point(const EC_POINT* p, BN_CTX* ctx) {
  Point out{};
  const std::size_t n = EC_POINT_point2oct(curve().group.get(), p, POINT_CONVERSION_UNCOMPRESSED, out.data(),
                                           out.size(), ctx);
  if (n != out.size()) fail("EC_POINT_point2oct");
  return out;
}

BnPtr affine_x(const EC_POINT* p, BN_CTX* ctx) {
  BnPtr x = bn_new();
  check(EC_POINT_get_affine_coordinates(curve().group.get(), p, x.get(), nullptr, ctx),
        "EC_POINT_get_affine_coordinates");
  return x;
}

BnPtr scalar_bn(const Scalar& scalar) {
  BnPtr d = bn_from(scalar.expose());
  if (!scalar_in_range(d.get())) throw CryptoError(CryptoErrc::invalid_scalar, "scalar outside [1, n-1]");
  return d;
}

class SystemEntropy final : public EntropySource {
 public:
  void fill(std::span<std::uint8_t> out) override {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
      throw CryptoError(CryptoErrc::entropy_failure, "RAND_bytes failed");
    }
  }
};

Scalar random_scalar(EntropySource& entropy) {
  ByteArray<kScalarSize> candidate{};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    entropy.fill(candidate);
    if (is_valid_scalar(candidate)) {
      Scalar s(candidate);
      secure_wipe(candidate.data(), candidate.size());
      return s;
    }
  }
  throw CryptoError(CryptoErrc::entropy_failure, "entropy source never produced a valid scalar");
}

// The fetched algorithm is shared; each call builds its own context. (A
// keyless CMAC context cannot be duplicated in OpenSSL 3.0.)
EVP_MAC* cmac_algorithm() {
  static EVP_MAC* const mac = check(EVP_MAC_fetch(nullptr, "CMAC", nullptr), "EVP_MAC_fetch(CMAC)");
  return mac;
}

MacTag cmac_raw(ByteView key, ByteView message) {
  MacCtxPtr ctx(check(EVP_MAC_CTX_new(cmac_algorithm()), "EVP_MAC_CTX_new"));
  char cipher[] = "AES-128-CBC";
  const OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_CIPHER, cipher, 0),
                               OSSL_PARAM_construct_end()};
  check(EVP_MAC_init(ctx.get(), key.data(), key.size(), params), "EVP_MAC_init");
  check(EVP_MAC_update(ctx.get(), message.data(), message.size()), "EVP_MAC_update");
  MacTag tag{};
  std::size_t len = 0;
  check(EVP_MAC_final(ctx.get(), tag.data(), &len, tag.size()), "EVP_MAC_final");
  if (len != tag.size()) fail("EVP_MAC_final length");
  return tag;
}

// RFC 6979 section 3.2 with HMAC-SHA256; qlen = hlen = 256 so bits2int is
// the identity and bits2octets is a single conditional subtraction.
class Rfc6979Nonces {
 public:
  Rfc6979Nonces(const ByteArray<32>& x_octets, const Digest& h1) {
    const BIGNUM* n = curve().order.get();
    BnPtr h = bn_from(h1);
    if (BN_cmp(h.get(), n) >= 0) check(BN_sub(h.get(), h.get(), n), "BN_sub");
    const auto h_octets = bn_to<32>(h.get());

    v_.fill(0x01);
    k_.fill(0x00);
    reseed(0x00, x_octets, h_octets);
    reseed(0x01, x_octets, h_octets);
  }

  ~Rfc6979Nonces() {
    secure_wipe(k_.data(), k_.size());
    secure_wipe(v_.data(), v_.size());
  }

  /// Next candidate k in [1, n-1].
  BnPtr next() {
    for (;;) {
      if (!first_) {
        Bytes msg(v_.begin(), v_.end());
        msg.push_back(0x00);
        k_ = hmac_sha256(k_, msg);
        v_ = hmac_sha256(k_, v_);
      }
      first_ = false;
      v_ = hmac_sha256(k_, v_);
      BnPtr k = bn_from(v_);
      if (scalar_in_range(k.get())) return k;
    }
  }

 private:
  void reseed(std::uint8_t sep, const ByteArray<32>& x, const ByteArray<32>& h) {
    Bytes msg(v_.begin(), v_.end());
    msg.push_back(sep);
    append(msg, x);
    append(msg, h);
    k_ = hmac_sha256(k_, msg);
    v_ = hmac_sha256(k_, v_);
    secure_wipe(msg.data(), msg.size());
  }

  ByteArray<32> v_{};
  ByteArray<32> k_{};
  bool first_ = true;
};

Signature sign_impl(const Scalar& private_scalar, ByteView message, bool normalize) {
  const Curve& c = curve();
  BnCtxPtr ctx = bn_ctx();
  BnPtr d = scalar_bn(private_scalar);
  const Digest h = sha256(message);
  BnPtr e = bn_from(h);

  Rfc6979Nonces nonces(private_scalar.expose(), h);
  BnPtr r = bn_new();
  BnPtr s = bn_new();
  PointPtr big_r = point_new();
  for (;;) {
    BnPtr k = nonces.next();
    check(EC_POINT_mul(c.group.get(), big_r.get(), k.get(), nullptr, nullptr, ctx.get()), "EC_POINT_mul");
    BnPtr rx = affine_x(big_r.get(), ctx.get());
    check(BN_nnmod(r.get(), rx.get(), c.order.get(), ctx.get()), "BN_nnmod");
    if (BN_is_zero(r.get())) continue;

    // s = k^-1 (e + r d) mod n
    BnPtr rd = bn_new();
    check(BN_mod_mul(rd.get(), r.get(), d.get(), c.order.get(), ctx.get()), "BN_mod_mul");
    BnPtr sum = bn_new();
    check(BN_mod_add(sum.get(), e.get(), rd.get(), c.order.get(), ctx.get()), "BN_mod_add");
    BnPtr kinv(check(BN_mod_inverse(nullptr, k.get(), c.order.get(), ctx.get()), "BN_mod_inverse"));
    check(BN_mod_mul(s.get(), kinv.get(), sum.get(), c.order.get(), ctx.get()), "BN_mod_mul");
    if (BN_is_zero(s.get())) continue;
    break;
  }
  if (normalize && BN_cmp(s.get(), c.half_order.get()) > 0) {
    check(BN_sub(s.get(), c.order.get(), s.get()), "BN_sub");
  }

  Signature sig{};
  const auto r_bytes = bn_to<32>(r.get());
  const auto s_bytes = bn_to<32>(s.get());
  std::copy(r_bytes.begin(), r_bytes.end(), sig.begin());
  std::copy(s_bytes.begin(), s_bytes.end(), sig.begin() + 32);
  return sig;
}

}  // namespace

EntropySource& system_entropy() {
  static SystemEntropy instance;
  return instance;
}

Digest sha256(ByteView message) {
  Digest out{};
  unsigned int len = 0;
  check(EVP_Digest(message.data(), message.size(), out.data(), &len, EVP_sha256(), nullptr), "EVP_Digest");
  return out;
}

MacTag cmac(const AesKey& key, ByteView message) { return cmac_raw(key, message); }

ByteArray<32> hmac_sha256(ByteView key, ByteView message) {
  ByteArray<32> out{};
  unsigned int len = 0;
  check(HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), out.data(),
             &len),
        "HMAC");
  return out;
}

bool is_valid_point(const Point& point) {
  BnCtxPtr ctx = bn_ctx();
  return decode_point(point, ctx.get()) != nullptr;
}

bool is_valid_scalar(const ByteArray<kScalarSize>& scalar) {
  BnPtr k = bn_from(scalar);
  return scalar_in_range(k.get());
}

Point public_from_scalar(const Scalar& scalar) {
  BnCtxPtr ctx = bn_ctx();
  BnPtr d = scalar_bn(scalar);
  PointPtr p = point_new();
  check(EC_POINT_mul(curve().group.get(), p.get(), d.get(), nullptr, nullptr, ctx.get()), "EC_POINT_mul");
  return encode_point(p.get(), ctx.get());
}

SessionKeyPair session_keypair_from_scalar(const Scalar& scalar) {
  SessionKeyPair kp;
  kp.public_point = public_from_scalar(scalar);
  kp.private_scalar = scalar;
  return kp;
}

SessionKeyPair gen_session_keypair(EntropySource& entropy) {
  return session_keypair_from_scalar(random_scalar(entropy));
}

IdentityKeyPair gen_identity_keypair(EntropySource& entropy) {
  IdentityKeyPair kp;
  kp.private_scalar = random_scalar(entropy);
  kp.public_point = public_from_scalar(kp.private_scalar);
  return kp;
}

SharedSecret ecdh_shared_secret(const Scalar& private_scalar, const Point& peer_public_point) {
  BnCtxPtr ctx = bn_ctx();
  PointPtr peer = decode_point(peer_public_point, ctx.get());
  if (!peer) throw CryptoError(CryptoErrc::invalid_point, "peer public key is not a valid P-256 point");
  BnPtr d = scalar_bn(private_scalar);
  PointPtr product = point_new();
  check(EC_POINT_mul(curve().group.get(), product.get(), nullptr, peer.get(), d.get(), ctx.get()),
        "EC_POINT_mul");
  if (EC_POINT_is_at_infinity(curve().group.get(), product.get()) == 1) {
    throw CryptoError(CryptoErrc::invalid_point, "shared point is the identity");
  }
  BnPtr x = affine_x(product.get(), ctx.get());
  SharedSecret out;
  out.x_coordinate.expose() = bn_to<32>(x.get());
  return out;
}

SessionKeys derive_session_keys(const SharedSecret& shared) {
  static constexpr std::uint8_t kSmkLabel[] = {0x01, 'S', 'M', 'K', 0x00, 0x80, 0x00};
  static constexpr std::uint8_t kSkLabel[] = {0x01, 'S', 'K', 0x00, 0x80, 0x00};

  ByteArray<32> little_endian = shared.x_coordinate.expose();
  std::reverse(little_endian.begin(), little_endian.end());

  SessionKeys keys;
  keys.kdk.expose() = cmac_raw(AesKey{}, little_endian);
  secure_wipe(little_endian.data(), little_endian.size());
  keys.km.expose() = cmac_raw(keys.kdk.expose(), kSmkLabel);
  keys.ke.expose() = cmac_raw(keys.kdk.expose(), kSkLabel);
  return keys;
}

AttestationKeyPair derive_attestation_keypair(const ByteArray<32>& seed) {
  static constexpr std::string_view kDomain = "WATZ-ATTEST-V1";

  Bytes material(kDomain.begin(), kDomain.end());
  append(material, seed);
  Digest subkey = sha256(material);
  secure_wipe(material.data(), material.size());

  Bytes block(subkey.begin(), subkey.end());
  block.resize(subkey.size() + 4);
  for (std::uint32_t counter = 0; counter < 1000; ++counter) {
    block[32] = static_cast<std::uint8_t>(counter >> 24);
    block[33] = static_cast<std::uint8_t>(counter >> 16);
    block[34] = static_cast<std::uint8_t>(counter >> 8);
    block[35] = static_cast<std::uint8_t>(counter);
    Digest candidate = sha256(block);
    if (is_valid_scalar(candidate)) {
      AttestationKeyPair kp;
      kp.private_scalar = Scalar(candidate);
      kp.public_point = public_from_scalar(kp.private_scalar);
      secure_wipe(candidate.data(), candidate.size());
      secure_wipe(block.data(), block.size());
      secure_wipe(subkey.data(), subkey.size());
      return kp;
    }
  }
  throw CryptoError(CryptoErrc::derivation_failure, "attestation key derivation exhausted its counter");
}

Signature ecdsa_sign_raw(const Scalar& private_scalar, ByteView message) {
  return sign_impl(private_scalar, message, false);
}

Signature ecdsa_sign(const Scalar& private_scalar, ByteView message) {
  return sign_impl(private_scalar, message, true);
}

bool ecdsa_verify(const Point& public_point, ByteView message, const Signature& signature) {
  try {
    const Curve& c = curve();
    BnCtxPtr ctx = bn_ctx();
    PointPtr q = decode_point(public_point, ctx.get());
    if (!q) return false;

    BnPtr r = bn_from(ByteView(signature).first(32));
    BnPtr s = bn_from(ByteView(signature).last(32));
    if (!scalar_in_range(r.get()) || !scalar_in_range(s.get())) return false;
    if (BN_cmp(s.get(), c.half_order.get()) > 0) return false;

    BnPtr e = bn_from(sha256(message));
    BnPtr w(BN_mod_inverse(nullptr, s.get(), c.order.get(), ctx.get()));
    if (!w) return false;
    BnPtr u1 = bn_new();
    BnPtr u2 = bn_new();
    check(BN_mod_mul(u1.get(), e.get(), w.get(), c.order.get(), ctx.get()), "BN_mod_mul");
    check(BN_mod_mul(u2.get(), r.get(), w.get(), c.order.get(), ctx.get()), "BN_mod_mul");

    PointPtr big_r = point_new();
    check(EC_POINT_mul(c.group.get(), big_r.get(), u1.get(), q.get(), u2.get(), ctx.get()), "EC_POINT_mul");
    if (EC_POINT_is_at_infinity(c.group.get(), big_r.get()) == 1) return false;
    BnPtr v = affine_x(big_r.get(), ctx.get());
    check(BN_nnmod(v.get(), v.get(), c.order.get(), ctx.get()), "BN_nnmod");
    return BN_cmp(v.get(), r.get()) == 0;
  } catch (const CryptoError&) {
    return false;
  }
}

Signature flip_s(const Signature& signature) {
  BnPtr s = bn_from(ByteView(signature).last(32));
  check(BN_sub(s.get(), curve().order.get(), s.get()), "BN_sub");
  Signature out = signature;
  const auto s_bytes = bn_to<32>(s.get());
  std::copy(s_bytes.begin(), s_bytes.end(), out.begin() + 32);
  return out;
}

Bytes aead_encrypt(const AesKey& key, const Iv& iv, ByteView plaintext) {
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(check(EVP_CIPHER_CTX_new(), "EVP_CIPHER_CTX_new"));
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr), "EVP_EncryptInit_ex");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr),
        "EVP_CTRL_GCM_SET_IVLEN");
  check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()), "EVP_EncryptInit_ex");

  Bytes out(plaintext.size() + kTagSize);
  int len = 0;
  std::size_t done = 0;
  // EVP lengths are int; feed large inputs in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  while (done < plaintext.size()) {
    const std::size_t n = std::min(kChunk, plaintext.size() - done);
    check(EVP_EncryptUpdate(ctx.get(), out.data() + done, &len, plaintext.data() + done, static_cast<int>(n)),
          "EVP_EncryptUpdate");
    done += static_cast<std::size_t>(len);
  }
  check(EVP_EncryptFinal_ex(ctx.get(), out.data() + done, &len), "EVP_EncryptFinal_ex");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                            out.data() + plaintext.size()),
        "EVP_CTRL_GCM_GET_TAG");
  return out;
}

std::optional<Bytes> aead_decrypt(const AesKey& key, const Iv& iv, ByteView ciphertext_and_tag) {
  if (ciphertext_and_tag.size() < kTagSize) return std::nullopt;
  const std::size_t ct_len = ciphertext_and_tag.size() - kTagSize;

  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(check(EVP_CIPHER_CTX_new(), "EVP_CIPHER_CTX_new"));
  check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr), "EVP_DecryptInit_ex");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr),
        "EVP_CTRL_GCM_SET_IVLEN");
  check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()), "EVP_DecryptInit_ex");

  Bytes out(ct_len);
  int len = 0;
  std::size_t done = 0;
  constexpr std::size_t kChunk = 1u << 30;
  while (done < ct_len) {
    const std::size_t n = std::min(kChunk, ct_len - done);
    check(EVP_DecryptUpdate(ctx.get(), out.data() + done, &len, ciphertext_and_tag.data() + done,
                            static_cast<int>(n)),
          "EVP_DecryptUpdate");
    done += static_cast<std::size_t>(len);
  }
  ByteArray<kTagSize> tag{};
  std::copy(ciphertext_and_tag.end() - kTagSize, ciphertext_and_tag.end(), tag.begin());
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize), tag.data()),
        "EVP_CTRL_GCM_SET_TAG");
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + done, &len) != 1) {
    secure_wipe(out.data(), out.size());
    return std::nullopt;
  }
  return out;
}

}  // namespace watz::crypto
