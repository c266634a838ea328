#pragma once

#include <optional>
#include <string>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/asn1/parse.hpp"
#include "derfuzz/crypto/rsa.hpp"
#include "derfuzz/hash.hpp"
#include "derfuzz/rpki/oids.hpp"

namespace derfuzz::rpki {

struct VerifyResult {
    bool parse_ok = false;
    bool digest_ok = false;
    bool ee_signature_ok = false;
    bool ca_signature_ok = false;
    bool key_ids_ok = false;
    std::string detail;

    bool accepted() const {
        return parse_ok && digest_ok && ee_signature_ok && ca_signature_ok && key_ids_ok;
    }
};

/// Full check of a CMS signed object against the issuing CA key: content
/// digest, payload signature with the one-off key, EE certificate signature
/// with the CA key, and both key identifier bindings. Navigation is purely
/// structural so mutated label-free objects fail cleanly instead of crashing.
inline VerifyResult verify_signed_object(ByteView der, const crypto::RsaPublicKey& ca_key) {
    using namespace asn1;
    VerifyResult r;
    auto parsed = parse_der(der);
    const TlvNode& root = parsed.root;
    auto nav = [&root](std::initializer_list<size_t> steps) -> const TlvNode* {
        const TlvNode* n = &root;
        for (size_t i : steps) {
            if (i >= n->children.size()) return nullptr;
            n = &n->children[i];
        }
        return n;
    };

    const TlvNode* econtent = nav({1, 0, 2, 1, 0});
    const TlvNode* ee_cert = nav({1, 0, 3, 0});
    const TlvNode* signer = nav({1, 0, 4, 0});
    if (!econtent || !ee_cert || !signer || signer->children.size() < 6 ||
        ee_cert->children.size() < 3) {
        r.detail = "structure incomplete";
        return r;
    }
    const TlvNode& tbs = ee_cert->children[0];
    if (tbs.children.size() < 8) {
        r.detail = "EE TBS incomplete";
        return r;
    }
    r.parse_ok = true;

    crypto::RsaPublicKey ee_key;
    Bytes spk_bits;
    try {
        const TlvNode& spki = tbs.children[6];
        Bytes spki_der = encode_der(spki);
        ee_key = crypto::parse_spki(spki_der);
        Bytes content = encode_content(spki.children.size() > 1 ? spki.children[1] : spki);
        if (content.empty()) throw std::runtime_error("no key bits");
        spk_bits.assign(content.begin() + 1, content.end());
    } catch (const std::exception& e) {
        r.detail = std::string("bad SPKI: ") + e.what();
        return r;
    }

    // message digest attribute vs eContent octets
    const TlvNode& attrs = signer->children[3];
    const TlvNode* digest_attr = nullptr;
    Bytes md_oid = oid_encode(oids::attr_message_digest);
    for (const auto& attr : attrs.children) {
        if (!attr.children.empty() && attr.children[0].value == md_oid &&
            attr.children.size() > 1 && !attr.children[1].children.empty()) {
            digest_attr = &attr.children[1].children[0];
            break;
        }
    }
    if (digest_attr)
        r.digest_ok = encode_content(*digest_attr) == sha256(encode_content(*econtent));

    // CMS signature over the SET-retagged signed attributes
    {
        TlvNode retagged = attrs;
        retagged.tag_class = TagClass::universal;
        retagged.tag_number = tag::set;
        retagged.constructed = true;
        retagged.tag_override.reset();
        Bytes message = encode_der(retagged);
        Bytes sig = encode_content(signer->children[5]);
        r.ee_signature_ok = crypto::rsa_verify_sha256(ee_key, message, sig);
    }

    // EE certificate signature by the CA
    {
        Bytes tbs_der = encode_der(tbs);
        Bytes sig_content = encode_content(ee_cert->children[2]);
        if (!sig_content.empty()) {
            Bytes sig(sig_content.begin() + 1, sig_content.end());
            r.ca_signature_ok = crypto::rsa_verify_sha256(ca_key, tbs_der, sig);
        }
    }

    // key identifiers: SKI extension and CMS sid must both be the digest of
    // the subject public key bits
    {
        Bytes expect = sha1(spk_bits);
        const TlvNode* exts = tbs.child_at({7, 0});
        Bytes ski;
        if (exts) {
            Bytes ski_oid = oid_encode(oids::ext_ski);
            for (const auto& ext : exts->children) {
                if (!ext.children.empty() && ext.children[0].value == ski_oid &&
                    ext.children.size() > 1) {
                    const TlvNode& wrap = ext.children.back();
                    if (!wrap.children.empty()) ski = encode_content(wrap.children[0]);
                }
            }
        }
        Bytes sid = encode_content(signer->children[1]);
        r.key_ids_ok = !ski.empty() && ski == expect && sid == expect;
    }
    return r;
}

}  // namespace derfuzz::rpki
