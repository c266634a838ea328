#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "derfuzz/asn1/tlv_json.hpp"
#include "derfuzz/mutate/mutator.hpp"
#include "derfuzz/orch/oracle.hpp"
#include "derfuzz/repair/repair.hpp"
#include "derfuzz/repo/builder.hpp"
#include "derfuzz/repo/snapshot.hpp"

namespace derfuzz::orch {

/// Everything a finding needs to be reproduced: the campaign parameters, the
/// parent trees the batch was mutated from, the full mutation logs, hashes of
/// every repository file, and a copy of the repository itself.
struct FindingContext {
    uint64_t campaign_seed = 0;
    uint64_t iteration = 0;
    uint64_t serial = 0;
    std::string host;
    size_t key_pool_size = 0;
    bool sign_objects = true;
    asn1::ObjectKind kind = asn1::ObjectKind::roa;
};

inline void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to) {
    std::filesystem::create_directories(to);
    std::filesystem::copy(from, to,
                          std::filesystem::copy_options::recursive |
                              std::filesystem::copy_options::overwrite_existing);
}

inline std::filesystem::path write_report(const std::filesystem::path& reports_dir,
                                          size_t finding_number, const OracleReport& oracle,
                                          const FindingContext& ctx, const mut::Batch& batch,
                                          const std::map<uint64_t, asn1::TlvNode>& parents,
                                          const repo::RepoLayout& layout,
                                          const std::vector<std::string>& target_logs) {
    namespace fs = std::filesystem;
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%03zu", finding_number);
    fs::path dir = reports_dir / (std::string(prefix) + "_" + oracle_name(oracle.kind) +
                                  (oracle.target.empty() ? "" : "_" + oracle.target));
    fs::create_directories(dir);

    // human-readable summary
    {
        std::ofstream out(dir / "report.txt");
        out << "oracle: " << oracle_name(oracle.kind) << "\n"
            << "target: " << (oracle.target.empty() ? "(all)" : oracle.target) << "\n"
            << "iteration: " << ctx.iteration << "\n"
            << "seed: " << ctx.campaign_seed << "\n"
            << "runtime: " << oracle.runtime_s << " s\n"
            << "detail: " << oracle.detail << "\n\n"
            << "log excerpt:\n"
            << oracle.log_excerpt << "\n";
        for (const auto& log : target_logs) out << "\n---\n" << log << "\n";
    }

    // machine-readable reproduction data
    {
        nlohmann::json j;
        j["oracle"] = oracle_name(oracle.kind);
        j["target"] = oracle.target;
        j["detail"] = oracle.detail;
        j["seed"] = ctx.campaign_seed;
        j["iteration"] = ctx.iteration;
        j["serial"] = ctx.serial;
        j["host"] = ctx.host;
        j["key_pool"] = ctx.key_pool_size;
        j["sign_objects"] = ctx.sign_objects;
        j["kind"] = asn1::kind_name(ctx.kind);
        write_file(dir / "report.json", j.dump(1));
    }

    // mutation logs, one line per record, entries separated by headers
    {
        std::ofstream out(dir / "mutation_logs.txt");
        for (size_t i = 0; i < batch.entries.size(); ++i) {
            const auto& e = batch.entries[i];
            out << "entry " << i << " parent=" << e.parent_id
                << " kind=" << asn1::kind_name(e.kind) << "\n";
            for (const auto& rec : e.log) out << "  " << mut::record_to_line(rec) << "\n";
        }
    }

    // parents and per-entry records for byte-exact replay
    {
        nlohmann::json jp;
        for (const auto& [id, tree] : parents)
            jp[std::to_string(id)] = asn1::tlv_to_json(tree);
        write_file(dir / "parents.json", jp.dump());

        std::ofstream out(dir / "entries.jsonl");
        for (const auto& e : batch.entries) {
            nlohmann::json je;
            je["parent"] = e.parent_id;
            je["kind"] = asn1::kind_name(e.kind);
            nlohmann::json recs = nlohmann::json::array();
            for (const auto& rec : e.log) recs.push_back(mut::record_to_line(rec));
            je["records"] = std::move(recs);
            out << je.dump() << "\n";
        }
    }

    // repository copy + hash manifest
    {
        copy_tree(layout.root, dir / "repository");
        std::ofstream out(dir / "repo_hashes.txt");
        for (const auto& [name, hash] : layout.file_hashes)
            out << hex_encode(hash) << "  " << name << "\n";
    }
    return dir;
}

struct ReplayResult {
    bool ok = false;
    size_t files_checked = 0;
    std::vector<std::string> mismatches;
};

/// Rebuild the triggering repository from the recorded parents, mutation
/// logs, seed-derived keys and iteration serial, then compare every file hash
/// against the recorded manifest.
inline ReplayResult replay_report(const std::filesystem::path& report_dir,
                                  const rpki::DataDir& data,
                                  const std::filesystem::path& scratch_dir) {
    namespace fs = std::filesystem;
    ReplayResult result;
    auto meta = nlohmann::json::parse(read_text_file(report_dir / "report.json"));
    uint64_t seed = meta.at("seed").get<uint64_t>();
    uint64_t serial = meta.at("serial").get<uint64_t>();
    bool sign_objects = meta.value("sign_objects", true);
    repo::SnapshotOptions sopt;
    sopt.host = meta.value("host", std::string("derfuzz.test"));
    sopt.key_pool_size = meta.value("key_pool", size_t(64));
    repo::RepoSnapshot snap =
        repo::load_or_build_snapshot(seed, data, scratch_dir / "snapshot.json", sopt);

    std::map<uint64_t, asn1::TlvNode> parents;
    {
        auto jp = nlohmann::json::parse(read_text_file(report_dir / "parents.json"));
        for (auto it = jp.begin(); it != jp.end(); ++it)
            parents.emplace(std::stoull(it.key()), asn1::tlv_from_json(it.value()));
    }

    mut::Batch batch;
    {
        std::istringstream in(read_text_file(report_dir / "entries.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto je = nlohmann::json::parse(line);
            mut::BatchEntry e;
            e.parent_id = je.at("parent").get<uint64_t>();
            e.kind = asn1::kind_from_name(je.at("kind").get<std::string>());
            auto parent = parents.find(e.parent_id);
            if (parent == parents.end())
                throw std::runtime_error("report references unknown parent " +
                                         std::to_string(e.parent_id));
            e.tree = parent->second;
            for (const auto& rec_line : je.at("records"))
                mut::apply_record(e.tree, mut::record_from_line(rec_line.get<std::string>()));
            batch.entries.push_back(std::move(e));
        }
    }

    // repair and encode with the same per-entry context the campaign used
    for (size_t i = 0; i < batch.entries.size(); ++i) {
        auto& e = batch.entries[i];
        rpki::RepairContext ctx;
        ctx.keys.ca = &snap.fuzz_ca_key;
        ctx.keys.one_off = &snap.one_off_pool.pick(i);
        ctx.clock = snap.clock;
        ctx.ca_subject_der = asn1::encode_der(rpki::make_name("derfuzz-ca"));
        char name[32];
        std::snprintf(name, sizeof(name), "obj%05zu%s", i,
                      repo::object_extension(e.kind).c_str());
        ctx.object_uri = snap.fuzz_object_uri(name);
        ctx.crl_uri = snap.rsync_base() + "fuzz/fuzz.crl";
        ctx.manifest_uri = snap.rsync_base() + "fuzz/fuzz.mft";
        ctx.ca_cert_uri = snap.rsync_base() + "ta/fuzz.cer";
        ctx.ca_repo_uri = snap.rsync_base() + "fuzz/";
        ctx.ee_serial = serial * 1000000 + i;
        if (sign_objects)
            repair::repair_fields(e.tree, data.plan(e.kind), ctx);
        else
            repair::propagate_taint(e.tree);
        e.encoded = asn1::encode_der(e.tree);
    }

    repo::RepoLayout layout =
        repo::build_repository(batch, snap, serial, scratch_dir / "repo", data);

    std::istringstream hashes(read_text_file(report_dir / "repo_hashes.txt"));
    std::string line;
    while (std::getline(hashes, line)) {
        if (line.size() < 66) continue;
        std::string expect = line.substr(0, 64);
        std::string name = line.substr(66);
        ++result.files_checked;
        auto it = layout.file_hashes.find(name);
        if (it == layout.file_hashes.end() || hex_encode(it->second) != expect)
            result.mismatches.push_back(name);
    }
    result.ok = result.files_checked > 0 && result.mismatches.empty();
    return result;
}

}  // namespace derfuzz::orch
