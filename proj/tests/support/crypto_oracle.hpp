#pragma once

// Independent cryptographic verification oracle for CMS signed objects.
// Deliberately shares nothing with the library's tree model: it walks raw
// DER with the strict reader below and verifies with OpenSSL EVP. Checks the
// same four things a relying party would: content digest, payload signature
// with the embedded one-off key, EE certificate signature with the CA key,
// and the key identifier bindings.

#include <openssl/evp.h>
#include <openssl/x509.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "support/strict_der.hpp"

namespace crypto_oracle {

using Buf = std::vector<uint8_t>;
using View = std::span<const uint8_t>;

struct Elem {
    strict_der::Header h;
    View whole;
    View content;
};

inline std::optional<Elem> elem_at(View data) {
    auto h = strict_der::read_header(data);
    if (!h) return std::nullopt;
    if (h->header_size + h->declared_length > data.size()) return std::nullopt;
    Elem e{*h, data.first(h->header_size + static_cast<size_t>(h->declared_length)),
           data.subspan(h->header_size, static_cast<size_t>(h->declared_length))};
    return e;
}

inline std::vector<Elem> children_of(const Elem& e) {
    std::vector<Elem> out;
    View rest = e.content;
    while (!rest.empty()) {
        auto c = elem_at(rest);
        if (!c) return {};
        out.push_back(*c);
        rest = rest.subspan(c->whole.size());
    }
    return out;
}

inline bool evp_verify_sha256(View spki, View message, View signature) {
    const unsigned char* p = spki.data();
    EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &p, static_cast<long>(spki.size()));
    if (!pkey) return false;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    bool ok = EVP_DigestVerifyInit(ctx, nullptr, EVP_sha256(), nullptr, pkey) == 1 &&
              EVP_DigestVerify(ctx, signature.data(), signature.size(), message.data(),
                               message.size()) == 1;
    EVP_MD_CTX_free(ctx);
    EVP_PKEY_free(pkey);
    return ok;
}

inline Buf evp_digest(const EVP_MD* md, View data) {
    Buf out(EVP_MAX_MD_SIZE);
    unsigned len = 0;
    EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr);
    out.resize(len);
    return out;
}

struct OracleResult {
    bool parse_ok = false;
    bool digest_ok = false;
    bool ee_signature_ok = false;
    bool ca_signature_ok = false;
    bool key_ids_ok = false;
    bool accepted() const {
        return parse_ok && digest_ok && ee_signature_ok && ca_signature_ok && key_ids_ok;
    }
};

/// `ca_spki` is the DER SubjectPublicKeyInfo of the issuing CA.
inline OracleResult verify_signed_object(View object_der, View ca_spki) {
    OracleResult r;
    auto root = elem_at(object_der);
    if (!root || !root->h.constructed) return r;
    auto ci = children_of(*root);
    if (ci.size() != 2) return r;
    auto content = children_of(ci[1]);  // [0] EXPLICIT SignedData
    if (content.size() != 1) return r;
    auto sd = children_of(content[0]);
    if (sd.size() < 5) return r;

    // encapContentInfo -> eContent octets
    auto encap = children_of(sd[2]);
    if (encap.size() != 2) return r;
    auto econtent_wrap = children_of(encap[1]);
    if (econtent_wrap.size() != 1) return r;
    View econtent = econtent_wrap[0].content;

    // EE certificate
    auto certs = children_of(sd[3]);
    if (certs.size() != 1) return r;
    auto cert_parts = children_of(certs[0]);
    if (cert_parts.size() != 3) return r;
    View tbs = cert_parts[0].whole;
    auto tbs_parts = children_of(cert_parts[0]);
    if (tbs_parts.size() < 8) return r;
    View spki = tbs_parts[6].whole;
    View cert_sig_bits = cert_parts[2].content;
    if (cert_sig_bits.empty() || cert_sig_bits[0] != 0) return r;

    // SignerInfo
    auto signer_infos = children_of(sd[4]);
    if (signer_infos.size() != 1) return r;
    auto si = children_of(signer_infos[0]);
    if (si.size() < 6) return r;
    View sid = si[1].content;
    Elem signed_attrs = si[3];
    View cms_sig = si[5].content;
    r.parse_ok = true;

    // 1. content digest: messageDigest attribute equals SHA-256(eContent)
    static const uint8_t md_oid[] = {0x06, 0x09, 0x2a, 0x86, 0x48, 0x86,
                                     0xf7, 0x0d, 0x01, 0x09, 0x04};
    for (const auto& attr : children_of(signed_attrs)) {
        auto parts = children_of(attr);
        if (parts.size() == 2 && parts[0].whole.size() == sizeof(md_oid) &&
            std::equal(parts[0].whole.begin(), parts[0].whole.end(), md_oid)) {
            auto values = children_of(parts[1]);
            if (values.size() == 1) {
                Buf expect = evp_digest(EVP_sha256(), econtent);
                r.digest_ok = values[0].content.size() == expect.size() &&
                              std::equal(expect.begin(), expect.end(),
                                         values[0].content.begin());
            }
        }
    }

    // 2. CMS signature over the signedAttrs re-tagged as SET OF
    {
        Buf retagged(signed_attrs.whole.begin(), signed_attrs.whole.end());
        retagged[0] = 0x31;
        r.ee_signature_ok = evp_verify_sha256(spki, retagged, cms_sig);
    }

    // 3. EE certificate signature with the CA key
    {
        View sig(cert_sig_bits.data() + 1, cert_sig_bits.size() - 1);
        r.ca_signature_ok = evp_verify_sha256(ca_spki, tbs, sig);
    }

    // 4. key identifiers: SKI extension content and sid both equal
    // SHA-1 of the subject public key bits
    {
        auto spki_parts = children_of(tbs_parts[6]);
        auto ext_wrap = children_of(tbs_parts[7]);  // [3] { SEQUENCE OF Extension }
        if (spki_parts.size() == 2 && !spki_parts[1].content.empty() &&
            ext_wrap.size() == 1) {
            View key_bits(spki_parts[1].content.data() + 1, spki_parts[1].content.size() - 1);
            Buf expect = evp_digest(EVP_sha1(), key_bits);
            static const uint8_t ski_oid[] = {0x06, 0x03, 0x55, 0x1d, 0x0e};
            Buf ski;
            for (const auto& ext : children_of(ext_wrap[0])) {
                auto parts = children_of(ext);
                if (parts.size() >= 2 && parts[0].whole.size() == sizeof(ski_oid) &&
                    std::equal(parts[0].whole.begin(), parts[0].whole.end(), ski_oid)) {
                    auto inner = elem_at(parts.back().content);
                    if (inner) ski.assign(inner->content.begin(), inner->content.end());
                }
            }
            r.key_ids_ok = !ski.empty() && ski.size() == expect.size() &&
                           std::equal(ski.begin(), ski.end(), expect.begin()) &&
                           sid.size() == ski.size() &&
                           std::equal(sid.begin(), sid.end(), ski.begin());
        }
    }
    return r;
}

}  // namespace crypto_oracle
