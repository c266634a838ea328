#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/mutate/mutator.hpp"
#include "derfuzz/repo/snapshot.hpp"

namespace derfuzz::repo {

struct RrdpDocuments {
    std::string notification_xml;
    std::string snapshot_xml;
    std::string snapshot_hash_hex;  // uppercase
    uint64_t serial = 0;
    std::string session_id;
};

struct RepoLayout {
    std::filesystem::path root;
    std::filesystem::path rsync_root;        // <root>/rsync
    std::filesystem::path notification_path; // <root>/rrdp/notification.xml
    std::filesystem::path tal_path;
    uint64_t serial = 0;
    std::string session_id;
    // publication-point relative name -> file hash, e.g. "fuzz/obj00000.roa"
    std::map<std::string, Bytes> file_hashes;
    std::vector<std::string> batch_files;  // manifest order
    rpki::VrpTriple test_roa_vrp;
};

inline std::string object_extension(asn1::ObjectKind kind) {
    switch (kind) {
        case asn1::ObjectKind::manifest: return ".mft";
        case asn1::ObjectKind::crl: return ".crl";
        case asn1::ObjectKind::ca_certificate:
        case asn1::ObjectKind::ee_certificate: return ".cer";
        case asn1::ObjectKind::aspa: return ".asa";
        case asn1::ObjectKind::gbr: return ".gbr";
        default: return ".roa";
    }
}

/// RFC 8182 shaped documents for one publication state. `files` maps
/// pp-relative names to bytes; URIs come from the snapshot's rsync base.
inline RrdpDocuments emit_rrdp(const RepoSnapshot& snap, uint64_t serial,
                               const std::map<std::string, Bytes>& files) {
    RrdpDocuments docs;
    docs.serial = serial;
    docs.session_id = snap.session_id;
    std::ostringstream xml;
    xml << "<snapshot xmlns=\"http://www.ripe.net/rpki/rrdp\" version=\"1\" session_id=\""
        << snap.session_id << "\" serial=\"" << serial << "\">\n";
    for (const auto& [name, bytes] : files) {
        xml << "  <publish uri=\"" << snap.rsync_base() << name << "\">"
            << base64_encode(bytes) << "</publish>\n";
    }
    xml << "</snapshot>\n";
    docs.snapshot_xml = xml.str();
    docs.snapshot_hash_hex = hex_encode_upper(sha256(to_bytes(docs.snapshot_xml)));

    std::ostringstream notif;
    notif << "<notification xmlns=\"http://www.ripe.net/rpki/rrdp\" version=\"1\" session_id=\""
          << snap.session_id << "\" serial=\"" << serial << "\">\n"
          << "  <snapshot uri=\"" << snap.https_base() << "rrdp/" << snap.session_id << "/"
          << serial << "/snapshot.xml\" hash=\"" << docs.snapshot_hash_hex << "\"/>\n"
          << "</notification>\n";
    docs.notification_xml = notif.str();
    return docs;
}

class BuildError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BuildOptions {
    size_t max_repository_bytes = 512ull * 1024 * 1024;
};

/// Nest an encoded batch into a complete publication point: batch files and a
/// re-signed manifest/CRL under the fuzzing CA, the untouched integrity CA
/// subtree, the trust anchor layer, and both RRDP and rsync views. The target
/// directory is assembled in a temp dir and swapped in with a rename.
inline RepoLayout build_repository(const mut::Batch& batch, const RepoSnapshot& snap,
                                   uint64_t serial, const std::filesystem::path& out_root,
                                   const rpki::DataDir& data, const BuildOptions& opt = {}) {
    namespace fs = std::filesystem;
    RepoLayout layout;
    layout.root = out_root;
    layout.serial = serial;
    layout.session_id = snap.session_id;
    layout.test_roa_vrp = snap.test_roa_vrp;

    std::map<std::string, Bytes> files;  // pp-relative name -> bytes
    files["ta.cer"] = snap.ta_cert;
    files["ta/ta.crl"] = snap.ta_crl;
    files["ta/ta.mft"] = snap.ta_mft;
    files["ta/fuzz.cer"] = snap.fuzz_ca_cert;
    files["ta/integrity.cer"] = snap.integrity_ca_cert;
    files["integrity/int.crl"] = snap.int_crl;
    files["integrity/int.mft"] = snap.int_mft;
    files["integrity/test.roa"] = snap.test_roa;

    rpki::RepairContext ctx;
    ctx.keys.ca = &snap.fuzz_ca_key;
    ctx.keys.one_off = &snap.fuzz_mft_key;
    ctx.clock = snap.clock;
    ctx.ca_subject_der = asn1::encode_der(rpki::make_name("derfuzz-ca"));
    ctx.crl_uri = snap.rsync_base() + "fuzz/fuzz.crl";
    ctx.ca_cert_uri = snap.rsync_base() + "ta/fuzz.cer";
    ctx.ee_serial = serial * 1000000 + 999999;

    // fuzzing CA CRL, re-signed with the iteration serial as its number
    {
        ctx.object_uri = ctx.crl_uri;
        files["fuzz/fuzz.crl"] =
            detail::sign_and_encode(rpki::make_crl({"derfuzz-ca", serial},
                                                   snap.fuzz_ca_key.pub, snap.clock),
                                    asn1::ObjectKind::crl, ctx, data);
    }

    // batch objects, one file per entry, manifest order = batch order
    rpki::ManifestParams mp;
    mp.number = serial;
    mp.issuer_cn = "derfuzz-ca";
    mp.ee_serial = ctx.ee_serial;
    size_t total_bytes = 0;
    for (size_t i = 0; i < batch.entries.size(); ++i) {
        const auto& entry = batch.entries[i];
        if (entry.encoded.empty())
            throw BuildError("batch entry " + std::to_string(i) + " was not encoded");
        char name[32];
        std::snprintf(name, sizeof(name), "obj%05zu%s", i,
                      object_extension(entry.kind).c_str());
        std::string rel = std::string("fuzz/") + name;
        total_bytes += entry.encoded.size();
        if (total_bytes > opt.max_repository_bytes)
            throw BuildError("batch exceeds configured maximum repository size");
        files[rel] = entry.encoded;
        mp.files.push_back({name, sha256(entry.encoded)});
        layout.batch_files.push_back(rel);
    }
    mp.files.push_back({"fuzz.crl", sha256(files["fuzz/fuzz.crl"])});

    // manifest over exactly the published payload set
    {
        ctx.object_uri = snap.rsync_base() + "fuzz/fuzz.mft";
        mp.crl_uri = ctx.crl_uri;
        mp.aia_uri = ctx.ca_cert_uri;
        mp.object_uri = ctx.object_uri;
        files["fuzz/fuzz.mft"] =
            detail::sign_and_encode(rpki::make_manifest(mp, ctx.keys, snap.clock),
                                    asn1::ObjectKind::manifest, ctx, data);
    }

    RrdpDocuments docs = emit_rrdp(snap, serial, files);

    // assemble in a temp dir, then atomically swap into place
    fs::path tmp = out_root;
    tmp += ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp / "rsync");
    for (const auto& [name, bytes] : files) {
        fs::path dest = tmp / "rsync" / name;
        fs::create_directories(dest.parent_path());
        write_file(dest, bytes);
        layout.file_hashes[name] = sha256(bytes);
    }
    fs::path rrdp_dir = tmp / "rrdp" / snap.session_id / std::to_string(serial);
    fs::create_directories(rrdp_dir);
    write_file(rrdp_dir / "snapshot.xml", docs.snapshot_xml);
    write_file(tmp / "rrdp" / "notification.xml", docs.notification_xml);
    write_file(tmp / "ta.tal", snap.tal_text);

    fs::path old = out_root;
    old += ".old";
    fs::remove_all(old);
    if (fs::exists(out_root)) fs::rename(out_root, old);
    fs::rename(tmp, out_root);
    fs::remove_all(old);

    layout.rsync_root = out_root / "rsync";
    layout.notification_path = out_root / "rrdp" / "notification.xml";
    layout.tal_path = out_root / "ta.tal";
    return layout;
}

}  // namespace derfuzz::repo
