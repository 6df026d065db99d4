#!/usr/bin/env python3
"""Independent reference computations for the frozen vectors in the C++ tests.

Uses the `cryptography` package and hashlib only; nothing here shares code
with the C++ implementation. Run it to regenerate the constants pinned in
tests/test_crypto.cpp, tests/test_evidence.cpp and tests/acceptance.cpp.
"""
import hashlib

from cryptography.hazmat.primitives import cmac, hashes
from cryptography.hazmat.primitives.asymmetric import ec, utils
from cryptography.hazmat.primitives.ciphers import algorithms
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
CURVE = ec.SECP256R1()


def sec1(priv):
    nums = priv.public_key().public_numbers()
    return b"\x04" + nums.x.to_bytes(32, "big") + nums.y.to_bytes(32, "big")


def aes_cmac(key, msg):
    c = cmac.CMAC(algorithms.AES(key))
    c.update(msg)
    return c.finalize()


def main():
    # RFC 4493 examples 1 and 2.
    k = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    print("cmac_ex1", aes_cmac(k, b"").hex())
    print("cmac_ex2", aes_cmac(k, bytes.fromhex("6bc1bee22e409f96e93d7e117393172a")).hex())

    # RFC 5903 section 8.1: i * (grx, gry) must land on girx.
    i = int("C88F01F510D9AC3F70A292DAA2316DE544E9AAB8AFE84049C62A9C57862D1433", 16)
    grx = int("D12DFB5289C8D4F81208B70270398C342296970A0BCCB74C736FC7554494BF63", 16)
    gry = int("56FBF3CA366CC23E8157854C13C58D6AAC23F046ADA30F8353E74F33039872AB", 16)
    peer = ec.EllipticCurvePublicNumbers(grx, gry, CURVE).public_key()
    shared = ec.derive_private_key(i, CURVE).exchange(ec.ECDH(), peer)
    print("rfc5903_girx", shared.hex())

    # RFC 6979 A.2.5, SHA-256, "sample".
    x = int("C9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721", 16)
    r = int("EFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716", 16)
    s = int("F7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8", 16)
    key = ec.derive_private_key(x, CURVE)
    key.public_key().verify(utils.encode_dss_signature(r, s), b"sample", ec.ECDSA(hashes.SHA256()))
    print("rfc6979_pub", sec1(key).hex())
    print("rfc6979_sig_verifies", True, "high_s", s > N // 2, "low_s", format(N - s, "064x"))

    # AES-128-GCM, zero key/iv, empty plaintext.
    print("gcm_tag", AESGCM(bytes(16)).encrypt(bytes(12), b"", None).hex())

    # Session key derivation for an all-zero x-coordinate.
    x_le = bytes(32)[::-1]
    kdk = aes_cmac(bytes(16), x_le)
    km = aes_cmac(kdk, bytes.fromhex("01534d4b008000"))
    ke = aes_cmac(kdk, bytes.fromhex("01534b00800000")[:6])
    print("zero_kdk", kdk.hex())
    print("zero_km", km.hex())
    print("zero_ke", ke.hex())

    # Session keys for the RFC 5903 shared secret (exercises the byte reversal).
    x_le = shared[::-1]
    kdk = aes_cmac(bytes(16), x_le)
    print("rfc5903_kdk", kdk.hex())
    print("rfc5903_km", aes_cmac(kdk, bytes.fromhex("01534d4b008000")).hex())
    print("rfc5903_ke", aes_cmac(kdk, bytes.fromhex("01534b008000")).hex())

    # Deterministic attestation key chain.
    def attest(seed):
        sub = hashlib.sha256(b"WATZ-ATTEST-V1" + seed).digest()
        for ctr in range(1000):
            cand = int.from_bytes(hashlib.sha256(sub + ctr.to_bytes(4, "big")).digest(), "big")
            if 1 <= cand < N:
                return cand, sec1(ec.derive_private_key(cand, CURVE))
        raise RuntimeError("no candidate")

    d, pub = attest(bytes(32))
    print("zero_seed_pub", pub.hex())
    d, pub = attest(bytes(range(32)))
    print("seq_seed_pub", pub.hex())

    # Anchor over G and 2G.
    g = sec1(ec.derive_private_key(1, CURVE))
    g2 = sec1(ec.derive_private_key(2, CURVE))
    print("point_g", g.hex())
    print("point_2g", g2.hex())
    anchor = hashlib.sha256(g + g2).digest()
    print("anchor_g_2g", anchor.hex())

    # Evidence issued by the zero-seed device over anchor(G, 2G), version 1,
    # claim sha256(""). RFC 6979 nonce, then s folded to the low half.
    d, pub = attest(bytes(32))
    claim = hashlib.sha256(b"").digest()
    region = anchor + (1).to_bytes(4, "big") + claim + pub
    der = ec.derive_private_key(d, CURVE).sign(region, ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
    r, s = utils.decode_dss_signature(der)
    if s > N // 2:
        s = N - s
    print("zero_seed_evidence", (region + r.to_bytes(32, "big") + s.to_bytes(32, "big")).hex())


if __name__ == "__main__":
    main()
