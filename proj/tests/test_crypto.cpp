#include <catch2/catch_amalgamated.hpp>
#include <openssl/evp.h>
#include <openssl/x509.h>

#include "derfuzz/crypto/keys.hpp"
#include "derfuzz/crypto/rsa.hpp"

using namespace derfuzz;
using namespace derfuzz::crypto;

namespace {

// Independent verification path: hand the SPKI to OpenSSL and let it check
// the PKCS#1 v1.5 / SHA-256 signature.
bool openssl_verify(const Bytes& spki, ByteView message, ByteView signature) {
    const unsigned char* p = spki.data();
    EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &p, static_cast<long>(spki.size()));
    REQUIRE(pkey != nullptr);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    bool ok = EVP_DigestVerifyInit(ctx, nullptr, EVP_sha256(), nullptr, pkey) == 1 &&
              EVP_DigestVerify(ctx, signature.data(), signature.size(), message.data(),
                               message.size()) == 1;
    EVP_MD_CTX_free(ctx);
    EVP_PKEY_free(pkey);
    return ok;
}

}  // namespace

TEST_CASE("deterministic key generation") {
    Rng a(1234), b(1234), c(99);
    RsaKeyPair k1 = generate_keypair(a);
    RsaKeyPair k2 = generate_keypair(b);
    RsaKeyPair k3 = generate_keypair(c);
    CHECK(k1.pub.n == k2.pub.n);
    CHECK(k1.d == k2.d);
    CHECK_FALSE(k1.pub.n == k3.pub.n);
    CHECK(k1.pub.modulus_bytes() == 256);
}

TEST_CASE("signatures verify with OpenSSL as the independent oracle") {
    Rng rng(5);
    RsaKeyPair key = generate_keypair(rng);
    Bytes spki = spki_der(key.pub);
    Bytes msg = to_bytes("route origin payload");
    Bytes sig = rsa_sign_sha256(key, msg);
    REQUIRE(sig.size() == 256);
    CHECK(openssl_verify(spki, msg, sig));
    CHECK(rsa_verify_sha256(key.pub, msg, sig));

    Bytes tampered = msg;
    tampered[0] ^= 1;
    CHECK_FALSE(openssl_verify(spki, tampered, sig));
    CHECK_FALSE(rsa_verify_sha256(key.pub, tampered, sig));

    Bytes broken_sig = sig;
    broken_sig[10] ^= 0x40;
    CHECK_FALSE(rsa_verify_sha256(key.pub, msg, broken_sig));
}

TEST_CASE("signing is deterministic") {
    Rng rng(5);
    RsaKeyPair key = generate_keypair(rng);
    Bytes msg = to_bytes("same bytes in, same bytes out");
    CHECK(rsa_sign_sha256(key, msg) == rsa_sign_sha256(key, msg));
}

TEST_CASE("SPKI round trip") {
    Rng rng(77);
    RsaKeyPair key = generate_keypair(rng);
    RsaPublicKey back = parse_spki(spki_der(key.pub));
    CHECK(back.n == key.pub.n);
    CHECK(back.e == key.pub.e);
}

TEST_CASE("key identifier is the SHA-1 of the subject public key bits") {
    Rng rng(8);
    RsaKeyPair key = generate_keypair(rng);
    Bytes id = key_identifier(key.pub);
    CHECK(id.size() == 20);
    CHECK(id == sha1(rsa_public_key_der(key.pub)));
}

TEST_CASE("private key DER and PEM round trip") {
    Rng rng(21);
    RsaKeyPair key = generate_keypair(rng);
    RsaKeyPair from_der = parse_private_key_der(private_key_der(key));
    CHECK(from_der.d == key.d);
    CHECK(from_der.qinv == key.qinv);
    RsaKeyPair from_pem = parse_private_key_pem(private_key_pem(key));
    CHECK(from_pem.d == key.d);

    // OpenSSL can read the exported key too
    Bytes der = private_key_der(key);
    const unsigned char* p = der.data();
    EVP_PKEY* pkey = d2i_PrivateKey(EVP_PKEY_RSA, nullptr, &p, static_cast<long>(der.size()));
    REQUIRE(pkey != nullptr);
    EVP_PKEY_free(pkey);
}

TEST_CASE("key pool hands out keys round robin") {
    KeyPool pool(Rng(3), 3);
    CHECK(pool.size() == 3);
    CHECK(&pool.pick(0) == &pool.pick(3));
    CHECK(&pool.pick(1) != &pool.pick(2));
}
