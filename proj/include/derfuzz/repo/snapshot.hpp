#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/asn1/label.hpp"
#include "derfuzz/crypto/keys.hpp"
#include "derfuzz/hash.hpp"
#include "derfuzz/repair/repair.hpp"
#include "derfuzz/rpki/data.hpp"
#include "derfuzz/rpki/make.hpp"
#include "derfuzz/rpki/vrp.hpp"

namespace derfuzz::repo {

inline constexpr uint32_t snapshot_format_version = 3;

struct SnapshotOptions {
    std::string host = "derfuzz.test";
    size_t key_pool_size = 64;
};

/// The static portion of a campaign repository: trust anchor, both CA
/// subtrees, the one-off key pool and every byte that does not depend on the
/// fuzzing input. Building it costs dozens of key generations, so it is
/// cached on disk and reloaded across runs of the same seed.
struct RepoSnapshot {
    uint64_t seed = 0;
    std::string host;
    std::string session_id;
    rpki::Clock clock;

    crypto::RsaKeyPair root_key, fuzz_ca_key, integrity_ca_key;
    crypto::RsaKeyPair ta_mft_key, fuzz_mft_key, int_mft_key, test_roa_key;
    crypto::KeyPool one_off_pool;

    Bytes ta_cert, fuzz_ca_cert, integrity_ca_cert;
    Bytes ta_crl, ta_mft;
    Bytes int_crl, int_mft, test_roa;
    std::string tal_text;
    rpki::VrpTriple test_roa_vrp;

    std::string rsync_base() const { return "rsync://" + host + "/repo/"; }
    std::string https_base() const { return "https://" + host + "/"; }
    std::string rrdp_notification_uri() const { return https_base() + "rrdp/notification.xml"; }

    std::string fuzz_object_uri(const std::string& file) const {
        return rsync_base() + "fuzz/" + file;
    }
};

/// TAL: comment-free URI list followed by the base64 of the trust anchor's
/// SubjectPublicKeyInfo.
inline std::string make_tal(const Bytes& root_spki, const std::string& https_uri,
                            const std::string& rsync_uri) {
    std::string b64 = base64_encode(root_spki);
    std::string out = https_uri + "\n" + rsync_uri + "\n\n";
    for (size_t i = 0; i < b64.size(); i += 64) out += b64.substr(i, 64) + "\n";
    return out;
}

namespace detail {

inline Bytes sign_and_encode(asn1::TlvNode tree, asn1::ObjectKind kind,
                             const rpki::RepairContext& ctx, const rpki::DataDir& data) {
    asn1::label_tree(tree, data.schema(kind));
    repair::sign_object(tree, data.plan(kind), ctx);
    return asn1::encode_der(tree);
}

}  // namespace detail

inline RepoSnapshot build_snapshot(uint64_t seed, const rpki::DataDir& data,
                                   const SnapshotOptions& opt = {}) {
    RepoSnapshot s;
    s.seed = seed;
    s.host = opt.host;
    {
        Rng sess = Rng::from_label(seed, "rrdp-session");
        std::ostringstream id;
        id << std::hex << sess.next() << sess.next();
        s.session_id = id.str().substr(0, 32);
    }
    Rng keyrng = Rng::from_label(seed, "snapshot-keys");
    s.root_key = crypto::generate_keypair(keyrng);
    s.fuzz_ca_key = crypto::generate_keypair(keyrng);
    s.integrity_ca_key = crypto::generate_keypair(keyrng);
    s.ta_mft_key = crypto::generate_keypair(keyrng);
    s.fuzz_mft_key = crypto::generate_keypair(keyrng);
    s.int_mft_key = crypto::generate_keypair(keyrng);
    s.test_roa_key = crypto::generate_keypair(keyrng);
    s.one_off_pool = crypto::KeyPool(Rng::from_label(seed, "one-off-pool"),
                                     std::max<size_t>(1, opt.key_pool_size));

    const std::string base = s.rsync_base();
    const rpki::RoaPrefix full_v4{{0, 0, 0, 0}, 0, 32, 1};

    // trust anchor, self-signed
    {
        rpki::CertParams p;
        p.issuer_cn = "derfuzz-root";
        p.subject_cn = "derfuzz-root";
        p.serial = 1;
        p.is_ca = true;
        p.self_signed = true;
        p.resources = {full_v4};
        p.repo_uri = base + "ta/";
        p.manifest_uri = base + "ta/ta.mft";
        asn1::TlvNode cert = rpki::make_certificate(
            p, s.root_key.pub, crypto::key_identifier(s.root_key.pub), {}, s.clock);
        Bytes sig = crypto::rsa_sign_sha256(s.root_key, asn1::encode_der(cert.children[0]));
        Bytes bits{0x00};
        append(bits, sig);
        cert.children[2].set_value(bits);
        s.ta_cert = asn1::encode_der(cert);
    }

    auto make_child_ca = [&](const std::string& cn, const crypto::RsaKeyPair& key,
                             uint64_t serial, const std::string& dir) {
        rpki::CertParams p;
        p.issuer_cn = "derfuzz-root";
        p.subject_cn = cn;
        p.serial = serial;
        p.is_ca = true;
        p.resources = {full_v4};
        p.crl_uri = base + "ta/ta.crl";
        p.aia_uri = base + "ta.cer";
        p.repo_uri = base + dir + "/";
        p.manifest_uri = base + dir + "/" + dir + ".mft";
        asn1::TlvNode cert =
            rpki::make_certificate(p, key.pub, crypto::key_identifier(key.pub),
                                   crypto::key_identifier(s.root_key.pub), s.clock);
        Bytes sig = crypto::rsa_sign_sha256(s.root_key, asn1::encode_der(cert.children[0]));
        Bytes bits{0x00};
        append(bits, sig);
        cert.children[2].set_value(bits);
        return asn1::encode_der(cert);
    };
    s.fuzz_ca_cert = make_child_ca("derfuzz-ca", s.fuzz_ca_key, 2, "fuzz");
    s.integrity_ca_cert = make_child_ca("derfuzz-integrity", s.integrity_ca_key, 3, "integrity");

    // TA publication point: CRL + manifest over the two CA certificates
    {
        rpki::RepairContext ctx;
        ctx.keys.ca = &s.root_key;
        ctx.keys.one_off = &s.ta_mft_key;
        ctx.clock = s.clock;
        ctx.ca_subject_der = asn1::encode_der(rpki::make_name("derfuzz-root"));
        ctx.crl_uri = base + "ta/ta.crl";
        ctx.ca_cert_uri = base + "ta.cer";
        ctx.object_uri = base + "ta/ta.mft";
        ctx.ee_serial = 101;

        s.ta_crl = detail::sign_and_encode(rpki::make_crl({"derfuzz-root", 1}, s.root_key.pub,
                                                          s.clock),
                                           asn1::ObjectKind::crl, ctx, data);
        rpki::ManifestParams mp;
        mp.number = 1;
        mp.issuer_cn = "derfuzz-root";
        mp.ee_serial = 101;
        mp.crl_uri = ctx.crl_uri;
        mp.aia_uri = ctx.ca_cert_uri;
        mp.object_uri = ctx.object_uri;
        mp.files.push_back({"ta.crl", sha256(s.ta_crl)});
        mp.files.push_back({"fuzz.cer", sha256(s.fuzz_ca_cert)});
        mp.files.push_back({"integrity.cer", sha256(s.integrity_ca_cert)});
        s.ta_mft = detail::sign_and_encode(rpki::make_manifest(mp, ctx.keys, s.clock),
                                           asn1::ObjectKind::manifest, ctx, data);
    }

    // integrity CA subtree: bit-identical across iterations by construction
    {
        rpki::RepairContext ctx;
        ctx.keys.ca = &s.integrity_ca_key;
        ctx.keys.one_off = &s.test_roa_key;
        ctx.clock = s.clock;
        ctx.ca_subject_der = asn1::encode_der(rpki::make_name("derfuzz-integrity"));
        ctx.crl_uri = base + "integrity/int.crl";
        ctx.ca_cert_uri = base + "ta/integrity.cer";
        ctx.object_uri = base + "integrity/test.roa";
        ctx.ee_serial = 201;

        s.int_crl = detail::sign_and_encode(
            rpki::make_crl({"derfuzz-integrity", 1}, s.integrity_ca_key.pub, s.clock),
            asn1::ObjectKind::crl, ctx, data);

        rpki::RoaParams rp;
        rp.as_id = 64511;
        rp.prefixes.push_back({{203, 0, 113}, 24, 24, 1});
        rp.ee_serial = 201;
        rp.issuer_cn = "derfuzz-integrity";
        rp.crl_uri = ctx.crl_uri;
        rp.aia_uri = ctx.ca_cert_uri;
        rp.object_uri = ctx.object_uri;
        s.test_roa = detail::sign_and_encode(rpki::make_roa(rp, ctx.keys, s.clock),
                                             asn1::ObjectKind::roa, ctx, data);
        s.test_roa_vrp = {64511, "203.0.113.0/24", 24};

        ctx.keys.one_off = &s.int_mft_key;
        ctx.object_uri = base + "integrity/int.mft";
        ctx.ee_serial = 202;
        rpki::ManifestParams mp;
        mp.number = 1;
        mp.issuer_cn = "derfuzz-integrity";
        mp.ee_serial = 202;
        mp.crl_uri = ctx.crl_uri;
        mp.aia_uri = ctx.ca_cert_uri;
        mp.object_uri = ctx.object_uri;
        mp.files.push_back({"int.crl", sha256(s.int_crl)});
        mp.files.push_back({"test.roa", sha256(s.test_roa)});
        s.int_mft = detail::sign_and_encode(rpki::make_manifest(mp, ctx.keys, s.clock),
                                            asn1::ObjectKind::manifest, ctx, data);
    }

    s.tal_text = make_tal(crypto::spki_der(s.root_key.pub), s.https_base() + "ta.cer",
                          base + "ta.cer");
    return s;
}

// ---- persistence ------------------------------------------------------------

inline nlohmann::json snapshot_to_json(const RepoSnapshot& s) {
    nlohmann::json j;
    j["format"] = snapshot_format_version;
    j["seed"] = s.seed;
    j["host"] = s.host;
    j["session"] = s.session_id;
    auto key = [](const crypto::RsaKeyPair& k) { return hex_encode(crypto::private_key_der(k)); };
    j["keys"] = {{"root", key(s.root_key)},       {"fuzz", key(s.fuzz_ca_key)},
                 {"integrity", key(s.integrity_ca_key)}, {"ta_mft", key(s.ta_mft_key)},
                 {"fuzz_mft", key(s.fuzz_mft_key)},      {"int_mft", key(s.int_mft_key)},
                 {"test_roa", key(s.test_roa_key)}};
    nlohmann::json pool = nlohmann::json::array();
    for (const auto& k : s.one_off_pool.all()) pool.push_back(key(k));
    j["pool"] = std::move(pool);
    j["objects"] = {{"ta_cert", hex_encode(s.ta_cert)},
                    {"fuzz_ca_cert", hex_encode(s.fuzz_ca_cert)},
                    {"integrity_ca_cert", hex_encode(s.integrity_ca_cert)},
                    {"ta_crl", hex_encode(s.ta_crl)},
                    {"ta_mft", hex_encode(s.ta_mft)},
                    {"int_crl", hex_encode(s.int_crl)},
                    {"int_mft", hex_encode(s.int_mft)},
                    {"test_roa", hex_encode(s.test_roa)}};
    j["tal"] = s.tal_text;
    j["test_vrp"] = s.test_roa_vrp.to_line();
    return j;
}

inline void store_snapshot(const RepoSnapshot& s, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    write_file(path, snapshot_to_json(s).dump(1));
}

/// Returns nothing on a missing, corrupt, or version-mismatched cache; the
/// caller rebuilds from scratch.
inline std::optional<RepoSnapshot> load_snapshot(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        auto j = nlohmann::json::parse(read_text_file(path));
        if (j.value("format", 0u) != snapshot_format_version) return std::nullopt;
        RepoSnapshot s;
        s.seed = j.at("seed").get<uint64_t>();
        s.host = j.at("host").get<std::string>();
        s.session_id = j.at("session").get<std::string>();
        auto key = [&](const char* name) {
            return crypto::parse_private_key_der(
                hex_decode(j.at("keys").at(name).get<std::string>()));
        };
        s.root_key = key("root");
        s.fuzz_ca_key = key("fuzz");
        s.integrity_ca_key = key("integrity");
        s.ta_mft_key = key("ta_mft");
        s.fuzz_mft_key = key("fuzz_mft");
        s.int_mft_key = key("int_mft");
        s.test_roa_key = key("test_roa");
        for (const auto& k : j.at("pool"))
            s.one_off_pool.all().push_back(
                crypto::parse_private_key_der(hex_decode(k.get<std::string>())));
        auto obj = [&](const char* name) {
            return hex_decode(j.at("objects").at(name).get<std::string>());
        };
        s.ta_cert = obj("ta_cert");
        s.fuzz_ca_cert = obj("fuzz_ca_cert");
        s.integrity_ca_cert = obj("integrity_ca_cert");
        s.ta_crl = obj("ta_crl");
        s.ta_mft = obj("ta_mft");
        s.int_crl = obj("int_crl");
        s.int_mft = obj("int_mft");
        s.test_roa = obj("test_roa");
        s.tal_text = j.at("tal").get<std::string>();
        auto vrp = rpki::VrpTriple::from_line(j.at("test_vrp").get<std::string>());
        if (!vrp) return std::nullopt;
        s.test_roa_vrp = *vrp;
        return s;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Load the cached snapshot when it matches (seed, host, pool size), build
/// and cache otherwise.
inline RepoSnapshot load_or_build_snapshot(uint64_t seed, const rpki::DataDir& data,
                                           const std::filesystem::path& cache_path,
                                           const SnapshotOptions& opt = {}) {
    if (auto cached = load_snapshot(cache_path)) {
        if (cached->seed == seed && cached->host == opt.host &&
            cached->one_off_pool.size() == std::max<size_t>(1, opt.key_pool_size))
            return std::move(*cached);
    }
    RepoSnapshot fresh = build_snapshot(seed, data, opt);
    try {
        store_snapshot(fresh, cache_path);
    } catch (const std::exception&) {
        // cache write failure is not fatal
    }
    return fresh;
}

}  // namespace derfuzz::repo
