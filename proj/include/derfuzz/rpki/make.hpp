#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/asn1/label.hpp"
#include "derfuzz/asn1/values.hpp"
#include "derfuzz/crypto/keys.hpp"
#include "derfuzz/rng.hpp"
#include "derfuzz/rpki/context.hpp"
#include "derfuzz/rpki/oids.hpp"

namespace derfuzz::rpki {

using asn1::TlvNode;

inline TlvNode alg_sha256_with_rsa() {
    return asn1::seq({asn1::oid(oids::sha256_with_rsa), asn1::null()});
}

inline TlvNode alg_rsa_encryption() {
    return asn1::seq({asn1::oid(oids::rsa_encryption), asn1::null()});
}

inline TlvNode alg_sha256() { return asn1::seq({asn1::oid(oids::sha256)}); }

/// Name ::= RDNSequence with a single CN.
inline TlvNode make_name(const std::string& common_name) {
    return asn1::seq(
        {asn1::set_of({asn1::seq({asn1::oid(oids::cn), asn1::printable(common_name)})})});
}

struct RoaPrefix {
    Bytes address;  // network-order address bytes, trailing zero octets trimmed
    uint8_t prefix_len = 0;
    std::optional<uint8_t> max_length;
    uint8_t family = 1;  // 1 = IPv4, 2 = IPv6
};

inline std::string prefix_to_string(const RoaPrefix& p) {
    if (p.family == 1) {
        uint8_t octets[4] = {0, 0, 0, 0};
        for (size_t i = 0; i < p.address.size() && i < 4; ++i) octets[i] = p.address[i];
        return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." +
               std::to_string(octets[2]) + "." + std::to_string(octets[3]) + "/" +
               std::to_string(p.prefix_len);
    }
    std::string hex = hex_encode(p.address);
    return "v6:" + hex + "/" + std::to_string(p.prefix_len);
}

/// RFC 3779 style IPAddress: BIT STRING of the significant prefix bits.
inline TlvNode encode_prefix_bits(const RoaPrefix& p) {
    size_t bytes_needed = (p.prefix_len + 7) / 8;
    Bytes bits(bytes_needed, 0);
    for (size_t i = 0; i < bytes_needed && i < p.address.size(); ++i) bits[i] = p.address[i];
    uint8_t unused = static_cast<uint8_t>(bytes_needed * 8 - p.prefix_len);
    if (bytes_needed && unused) bits.back() &= static_cast<uint8_t>(0xff << unused);
    return asn1::bit_string(bits, unused);
}

namespace detail {

inline TlvNode extension(const std::string& oid, bool critical, std::vector<TlvNode> inner) {
    std::vector<TlvNode> elems;
    elems.push_back(asn1::oid(oid));
    if (critical) elems.push_back(asn1::boolean(true));
    elems.push_back(asn1::octet_wrapping(std::move(inner)));
    return asn1::seq(std::move(elems));
}

inline TlvNode access_description(const std::string& method_oid, const std::string& uri) {
    return asn1::seq({asn1::oid(method_oid), asn1::ctx_prim(6, to_bytes(uri))});
}

inline TlvNode ip_addr_blocks(const std::vector<RoaPrefix>& prefixes) {
    std::vector<TlvNode> v4, v6;
    for (const auto& p : prefixes)
        (p.family == 1 ? v4 : v6).push_back(encode_prefix_bits(p));
    std::vector<TlvNode> families;
    if (!v4.empty())
        families.push_back(asn1::seq({asn1::octet({0x00, 0x01}), asn1::seq(std::move(v4))}));
    if (!v6.empty())
        families.push_back(asn1::seq({asn1::octet({0x00, 0x02}), asn1::seq(std::move(v6))}));
    return asn1::seq(std::move(families));
}

}  // namespace detail

struct CertParams {
    std::string issuer_cn;
    std::string subject_cn;
    uint64_t serial = 1;
    bool is_ca = false;
    bool self_signed = false;
    std::vector<RoaPrefix> resources;
    // URIs; empty entries are omitted where the profile allows
    std::string crl_uri;
    std::string aia_uri;       // issuing CA certificate
    std::string repo_uri;      // SIA caRepository (CA certs)
    std::string manifest_uri;  // SIA rpkiManifest (CA certs)
    std::string object_uri;    // SIA signedObject (EE certs)
};

/// X.509 certificate in the resource-PKI profile. The signature bit string
/// is left zeroed; signing fills it in.
inline TlvNode make_certificate(const CertParams& p, const crypto::RsaPublicKey& subject_key,
                                const Bytes& subject_key_id, const Bytes& issuer_key_id,
                                const Clock& clock) {
    using namespace asn1;
    std::vector<TlvNode> exts;
    exts.push_back(detail::extension(oids::ext_ski, false, {octet(subject_key_id)}));
    if (!p.self_signed)
        exts.push_back(
            detail::extension(oids::ext_aki, false, {seq({ctx_prim(0, issuer_key_id)})}));
    if (p.is_ca) {
        exts.push_back(detail::extension(oids::ext_basic_constraints, true,
                                         {seq({boolean(true)})}));
        exts.push_back(detail::extension(oids::ext_key_usage, true,
                                         {bit_string({0x06}, 1)}));  // keyCertSign | cRLSign
    } else {
        exts.push_back(detail::extension(oids::ext_key_usage, true,
                                         {bit_string({0x80}, 7)}));  // digitalSignature
    }
    if (!p.crl_uri.empty())
        exts.push_back(detail::extension(
            oids::ext_crldp, false,
            {seq({seq({ctx(0, {ctx(0, {ctx_prim(6, to_bytes(p.crl_uri))})})})})}));
    if (!p.aia_uri.empty())
        exts.push_back(detail::extension(
            oids::ext_aia, false,
            {seq({detail::access_description(oids::access_ca_issuers, p.aia_uri)})}));
    std::vector<TlvNode> sia;
    if (!p.repo_uri.empty())
        sia.push_back(detail::access_description(oids::access_ca_repository, p.repo_uri));
    if (!p.manifest_uri.empty())
        sia.push_back(detail::access_description(oids::access_rpki_manifest, p.manifest_uri));
    if (!p.object_uri.empty())
        sia.push_back(detail::access_description(oids::access_signed_object, p.object_uri));
    if (!sia.empty())
        exts.push_back(detail::extension(oids::ext_sia, false, {seq(std::move(sia))}));
    exts.push_back(detail::extension(oids::ext_cert_policies, true,
                                     {seq({seq({oid(oids::policy_cp)})})}));
    if (!p.resources.empty())
        exts.push_back(detail::extension(oids::ext_ip_addr_blocks, true,
                                         {detail::ip_addr_blocks(p.resources)}));

    auto spki_parsed = asn1::parse_der(crypto::spki_der(subject_key));
    TlvNode tbs = seq({
        ctx(0, {integer(2)}),  // version v3
        integer(p.serial),
        alg_sha256_with_rsa(),
        make_name(p.issuer_cn),
        seq({utc_time(clock.not_before_utc), utc_time(clock.not_after_utc)}),
        make_name(p.subject_cn),
        std::move(spki_parsed.root),
        ctx(3, {seq(std::move(exts))}),
    });
    return seq({std::move(tbs), alg_sha256_with_rsa(), bit_string(Bytes(256, 0))});
}

/// CMS SignedData envelope shared by every signed-object profile. Digest and
/// signature fields hold placeholders until signing.
inline TlvNode make_signed_object(const std::string& econtent_type, TlvNode econtent,
                                  TlvNode ee_cert, const Bytes& ee_key_id,
                                  const Clock& clock) {
    using namespace asn1;
    TlvNode signed_attrs = ctx(
        0, {
               seq({oid(oids::attr_content_type), set_of({oid(econtent_type)})}),
               seq({oid(oids::attr_signing_time), set_of({utc_time(clock.signing_time_utc)})}),
               seq({oid(oids::attr_message_digest), set_of({octet(Bytes(32, 0))})}),
           });
    TlvNode signer_info = seq({
        integer(3),
        ctx_prim(0, ee_key_id),  // sid = SubjectKeyIdentifier
        alg_sha256(),
        std::move(signed_attrs),
        alg_rsa_encryption(),
        octet(Bytes(256, 0)),
    });
    TlvNode signed_data = seq({
        integer(3),
        set_of({alg_sha256()}),
        seq({oid(econtent_type), ctx(0, {std::move(econtent)})}),
        ctx(0, {std::move(ee_cert)}),
        set_of({std::move(signer_info)}),
    });
    return seq({oid(oids::signed_data), ctx(0, {std::move(signed_data)})});
}

struct RoaParams {
    uint32_t as_id = 64500;
    std::vector<RoaPrefix> prefixes;
    uint64_t ee_serial = 1;
    std::string issuer_cn = "derfuzz-ca";
    std::string subject_cn;
    std::string crl_uri, aia_uri, object_uri;
};

inline TlvNode make_roa(const RoaParams& p, const crypto::KeyMaterial& keys,
                        const Clock& clock) {
    using namespace asn1;
    std::vector<TlvNode> families_content;
    std::vector<TlvNode> v4, v6;
    for (const auto& pre : p.prefixes) {
        std::vector<TlvNode> addr{encode_prefix_bits(pre)};
        if (pre.max_length) addr.push_back(integer(*pre.max_length));
        (pre.family == 1 ? v4 : v6).push_back(seq(std::move(addr)));
    }
    if (!v4.empty())
        families_content.push_back(seq({octet({0x00, 0x01}), seq(std::move(v4))}));
    if (!v6.empty())
        families_content.push_back(seq({octet({0x00, 0x02}), seq(std::move(v6))}));
    TlvNode payload = seq({integer(p.as_id), seq(std::move(families_content))});
    TlvNode econtent = octet_wrapping({std::move(payload)});

    CertParams cp;
    cp.issuer_cn = p.issuer_cn;
    cp.subject_cn = p.subject_cn.empty() ? "ee-" + std::to_string(p.ee_serial) : p.subject_cn;
    cp.serial = p.ee_serial;
    cp.resources = p.prefixes;
    cp.crl_uri = p.crl_uri;
    cp.aia_uri = p.aia_uri;
    cp.object_uri = p.object_uri;
    Bytes ee_key_id = crypto::key_identifier(keys.one_off->pub);
    TlvNode ee = make_certificate(cp, keys.one_off->pub, ee_key_id,
                                  crypto::key_identifier(keys.ca->pub), clock);
    return make_signed_object(oids::ct_roa, std::move(econtent), std::move(ee), ee_key_id,
                              clock);
}

struct ManifestEntry {
    std::string file_name;
    Bytes sha256_hash;
};

struct ManifestParams {
    uint64_t number = 1;
    std::vector<ManifestEntry> files;
    uint64_t ee_serial = 1;
    std::string issuer_cn = "derfuzz-ca";
    std::string crl_uri, aia_uri, object_uri;
};

inline TlvNode make_manifest(const ManifestParams& p, const crypto::KeyMaterial& keys,
                             const Clock& clock) {
    using namespace asn1;
    std::vector<TlvNode> file_list;
    for (const auto& f : p.files)
        file_list.push_back(seq({ia5(f.file_name), bit_string(f.sha256_hash)}));
    TlvNode payload = seq({
        integer(p.number),
        generalized_time(clock.this_update_gen),
        generalized_time(clock.next_update_gen),
        oid(oids::sha256),
        seq(std::move(file_list)),
    });
    CertParams cp;
    cp.issuer_cn = p.issuer_cn;
    cp.subject_cn = "mft-ee-" + std::to_string(p.ee_serial);
    cp.serial = p.ee_serial;
    cp.crl_uri = p.crl_uri;
    cp.aia_uri = p.aia_uri;
    cp.object_uri = p.object_uri;
    Bytes ee_key_id = crypto::key_identifier(keys.one_off->pub);
    TlvNode ee = make_certificate(cp, keys.one_off->pub, ee_key_id,
                                  crypto::key_identifier(keys.ca->pub), clock);
    return make_signed_object(oids::ct_manifest, octet_wrapping({std::move(payload)}),
                              std::move(ee), ee_key_id, clock);
}

struct CrlParams {
    std::string issuer_cn = "derfuzz-ca";
    uint64_t number = 1;
};

inline TlvNode make_crl(const CrlParams& p, const crypto::RsaPublicKey& issuer_key,
                        const Clock& clock) {
    using namespace asn1;
    Bytes aki = crypto::key_identifier(issuer_key);
    TlvNode tbs = seq({
        integer(1),  // v2
        alg_sha256_with_rsa(),
        make_name(p.issuer_cn),
        utc_time(clock.not_before_utc),
        utc_time(clock.not_after_utc),
        ctx(0, {seq({
                    detail::extension(oids::ext_aki, false, {seq({ctx_prim(0, aki)})}),
                    detail::extension(oids::ext_crl_number, false, {integer(p.number)}),
                })}),
    });
    return seq({std::move(tbs), alg_sha256_with_rsa(), bit_string(Bytes(256, 0))});
}

struct AspaParams {
    uint32_t customer_as = 64500;
    std::vector<uint32_t> providers{64510};
    uint64_t ee_serial = 1;
    std::string issuer_cn = "derfuzz-ca";
    std::string crl_uri, aia_uri, object_uri;
};

inline TlvNode make_aspa(const AspaParams& p, const crypto::KeyMaterial& keys,
                         const Clock& clock) {
    using namespace asn1;
    std::vector<TlvNode> providers;
    for (uint32_t as : p.providers) providers.push_back(integer(as));
    TlvNode payload = seq({integer(p.customer_as), seq(std::move(providers))});
    CertParams cp;
    cp.issuer_cn = p.issuer_cn;
    cp.subject_cn = "aspa-ee-" + std::to_string(p.ee_serial);
    cp.serial = p.ee_serial;
    cp.crl_uri = p.crl_uri;
    cp.aia_uri = p.aia_uri;
    cp.object_uri = p.object_uri;
    Bytes ee_key_id = crypto::key_identifier(keys.one_off->pub);
    TlvNode ee = make_certificate(cp, keys.one_off->pub, ee_key_id,
                                  crypto::key_identifier(keys.ca->pub), clock);
    return make_signed_object(oids::ct_aspa, octet_wrapping({std::move(payload)}),
                              std::move(ee), ee_key_id, clock);
}

struct GbrParams {
    std::string vcard = "BEGIN:VCARD\r\nVERSION:4.0\r\nFN:derfuzz test\r\nEND:VCARD\r\n";
    uint64_t ee_serial = 1;
    std::string issuer_cn = "derfuzz-ca";
    std::string crl_uri, aia_uri, object_uri;
};

inline TlvNode make_gbr(const GbrParams& p, const crypto::KeyMaterial& keys,
                        const Clock& clock) {
    using namespace asn1;
    CertParams cp;
    cp.issuer_cn = p.issuer_cn;
    cp.subject_cn = "gbr-ee-" + std::to_string(p.ee_serial);
    cp.serial = p.ee_serial;
    cp.crl_uri = p.crl_uri;
    cp.aia_uri = p.aia_uri;
    cp.object_uri = p.object_uri;
    Bytes ee_key_id = crypto::key_identifier(keys.one_off->pub);
    TlvNode ee = make_certificate(cp, keys.one_off->pub, ee_key_id,
                                  crypto::key_identifier(keys.ca->pub), clock);
    return make_signed_object(oids::ct_gbr, octet(to_bytes(p.vcard)), std::move(ee),
                              ee_key_id, clock);
}

/// Random but well-formed ROA content for the self-generated corpus.
inline TlvNode make_random_roa(Rng& rng, const crypto::KeyMaterial& keys, const Clock& clock,
                               uint64_t serial) {
    RoaParams p;
    p.as_id = static_cast<uint32_t>(rng.range(1, 4200000000ULL));
    p.ee_serial = serial;
    size_t count = rng.range(1, 4);
    for (size_t i = 0; i < count; ++i) {
        RoaPrefix pre;
        pre.family = 1;
        pre.prefix_len = static_cast<uint8_t>(rng.range(8, 24));
        pre.address = rng.bytes((pre.prefix_len + 7) / 8);
        if (rng.chance(0.5))
            pre.max_length = static_cast<uint8_t>(rng.range(pre.prefix_len, 32));
        p.prefixes.push_back(std::move(pre));
    }
    return make_roa(p, keys, clock);
}

inline TlvNode make_generated(asn1::ObjectKind kind, Rng& rng, const crypto::KeyMaterial& keys,
                              const Clock& clock, uint64_t serial) {
    switch (kind) {
        case asn1::ObjectKind::manifest: {
            ManifestParams p;
            p.number = serial;
            p.ee_serial = serial;
            size_t n = rng.range(1, 5);
            for (size_t i = 0; i < n; ++i)
                p.files.push_back({"file" + std::to_string(i) + ".roa", rng.bytes(32)});
            return make_manifest(p, keys, clock);
        }
        case asn1::ObjectKind::crl: {
            CrlParams p;
            p.number = serial;
            return make_crl(p, keys.ca->pub, clock);
        }
        case asn1::ObjectKind::aspa: {
            AspaParams p;
            p.customer_as = static_cast<uint32_t>(rng.range(1, 4200000000ULL));
            p.ee_serial = serial;
            size_t n = rng.range(1, 6);
            p.providers.clear();
            for (size_t i = 0; i < n; ++i)
                p.providers.push_back(static_cast<uint32_t>(rng.range(1, 4200000000ULL)));
            return make_aspa(p, keys, clock);
        }
        case asn1::ObjectKind::gbr: {
            GbrParams p;
            p.ee_serial = serial;
            return make_gbr(p, keys, clock);
        }
        default:
            return make_random_roa(rng, keys, clock, serial);
    }
}

}  // namespace derfuzz::rpki
