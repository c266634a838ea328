#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "derfuzz/asn1/parse.hpp"
#include "derfuzz/cov/shm.hpp"
#include "derfuzz/crypto/rsa.hpp"
#include "derfuzz/hash.hpp"
#include "derfuzz/rpki/make.hpp"
#include "derfuzz/rpki/verify.hpp"
#include "derfuzz/rpki/vrp.hpp"
#include "derfuzz/sim/config.hpp"

namespace derfuzz::sim {

/// Simulated relying party used for ground-truth experiments: processes the
/// repository's batch objects in strictly sequential phase loops, bumps
/// AFL-style shared counters exactly like an instrumented binary would, and
/// carries configurable planted bugs. It keeps its own exact 64-bit counter
/// log so sampling and attribution can be validated bit for bit.
class Validator {
public:
    struct Options {
        std::filesystem::path rsync_root;        // rsync layout mode
        std::filesystem::path notification;      // rrdp mode (one of the two is set)
        std::filesystem::path output_file;
        std::filesystem::path truth_file;        // optional ground-truth dump
        SimConfig config;
    };

    explicit Validator(Options opt) : opt_(std::move(opt)) {}

    int run() {
        region_ = cov::SharedRegion::open_from_env(opt_.config.shm_env_var,
                                                   opt_.config.map_size);
        truth_counts_.assign(opt_.config.map_size, 0);
        truth_first_object_.assign(opt_.config.map_size, 0);

        if (opt_.config.setup_ms)
            std::this_thread::sleep_for(std::chrono::milliseconds(opt_.config.setup_ms));

        std::vector<LoadedObject> objects;
        Bytes test_roa;
        crypto::RsaPublicKey fuzz_ca_key, integrity_ca_key;
        try {
            load_repository(objects, test_roa, fuzz_ca_key, integrity_ca_key);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "repository load failed: %s\n", e.what());
            return 2;
        }

        for (const auto& d : opt_.config.decoys)
            if (d.mode == Decoy::Mode::constant)
                for (uint64_t i = 0; i < d.value; ++i) bump(d.counter, 0);
            else if (d.mode == Decoy::Mode::plus_one)
                bump(d.counter, 0);  // one extra hit before the loops

        bool drop_test_roa = false;
        std::vector<rpki::VrpTriple> accepted;

        // phase loops: every loop walks the full batch before the next starts
        for (size_t phase = 0; phase < opt_.config.loops.size(); ++phase) {
            const PhaseLoop& loop = opt_.config.loops[phase];
            bool last_phase = phase + 1 == opt_.config.loops.size();
            for (size_t i = 0; i < objects.size(); ++i) {
                bump(loop.head_counter, i + 1);
                for (const auto& d : opt_.config.decoys) {
                    if (d.mode == Decoy::Mode::plus_one) bump(d.counter, i + 1);
                    if (d.mode == Decoy::Mode::minus_one && i > 0) bump(d.counter, i + 1);
                }
                for (const auto& h : opt_.config.hot_counters) {
                    if (phase != 0) continue;  // hot counters live in the first loop
                    uint64_t before = h.total * i / objects.size();
                    uint64_t after = h.total * (i + 1) / objects.size();
                    for (uint64_t k = before; k < after; ++k) bump(h.counter, i + 1);
                }
                busy_work(loop.work_us);
                eval_rules(objects[i].bytes, phase, i + 1);
                if (last_phase)
                    process_object(objects[i], fuzz_ca_key, i + 1, accepted, drop_test_roa);
            }
        }

        // the integrity publication point is validated outside the batch loops
        if (!test_roa.empty()) {
            bool ok = !opt_.config.verify_signatures ||
                      rpki::verify_signed_object(test_roa, integrity_ca_key).accepted();
            if (ok && !drop_test_roa)
                for (const auto& vrp : extract_vrps(test_roa)) accepted.push_back(vrp);
        }

        write_output(accepted);
        write_truth();
        return 0;
    }

private:
    struct LoadedObject {
        std::string name;
        Bytes bytes;
        bool hash_ok = true;
    };

    void bump(uint32_t counter, size_t object_index) {
        if (region_.valid() && counter < region_.size()) ++region_.data()[counter];
        if (counter < truth_counts_.size()) {
            if (truth_counts_[counter] == 0)
                truth_first_object_[counter] = static_cast<uint32_t>(object_index);
            ++truth_counts_[counter];
        }
    }

    static void busy_work(uint32_t work_us) {
        if (!work_us) return;
        auto until = std::chrono::steady_clock::now() + std::chrono::microseconds(work_us);
        while (std::chrono::steady_clock::now() < until) {
        }
    }

    void eval_rules(const Bytes& object, size_t phase, size_t object_index) {
        bool last_phase = phase + 1 == opt_.config.loops.size();
        for (const auto& rule : opt_.config.branch_rules) {
            size_t rule_phase = rule.phase == SIZE_MAX
                                    ? opt_.config.loops.size() - 1
                                    : rule.phase;
            if (rule_phase != phase) continue;
            if (rule.trigger.matches(object))
                for (uint32_t ctr : rule.counters) bump(ctr, object_index);
        }
        if (!last_phase) return;
        for (const auto& bug : opt_.config.bugs) {
            if (bug.effect == PlantedBug::Effect::deep_branch) {
                // each stage unlocks only when every earlier marker is present
                for (const auto& stage : bug.stages) {
                    Predicate p;
                    p.kind = Predicate::Kind::contains;
                    p.needle = stage.marker;
                    if (!p.matches(object)) break;
                    for (uint32_t ctr : stage.counters) bump(ctr, object_index);
                }
            }
        }
    }

    void process_object(const LoadedObject& obj, const crypto::RsaPublicKey& ca_key,
                        size_t object_index, std::vector<rpki::VrpTriple>& accepted,
                        bool& drop_test_roa) {
        for (const auto& bug : opt_.config.bugs) {
            if (bug.effect == PlantedBug::Effect::deep_branch) continue;
            if (!bug.trigger.matches(obj.bytes)) continue;
            switch (bug.effect) {
                case PlantedBug::Effect::crash:
                    std::fprintf(stderr, "FATAL: validator panic while processing %s\n",
                                 obj.name.c_str());
                    std::fflush(stderr);
                    std::abort();
                case PlantedBug::Effect::stall:
                    if (!stalled_) {  // one hang per run is enough to trip the oracle
                        stalled_ = true;
                        std::this_thread::sleep_for(std::chrono::milliseconds(bug.stall_ms));
                    }
                    break;
                case PlantedBug::Effect::drop_test_roa:
                    drop_test_roa = true;
                    break;
                default: break;
            }
        }
        if (opt_.config.check_manifest_hashes && !obj.hash_ok) return;
        if (opt_.config.verify_signatures &&
            !rpki::verify_signed_object(obj.bytes, ca_key).accepted())
            return;
        if (opt_.config.reject_rule_enabled && opt_.config.reject_rule.matches(obj.bytes))
            return;
        (void)object_index;
        for (const auto& vrp : extract_vrps(obj.bytes)) accepted.push_back(vrp);
    }

    // ---- repository loading --------------------------------------------------

    void load_repository(std::vector<LoadedObject>& objects, Bytes& test_roa,
                         crypto::RsaPublicKey& fuzz_ca_key,
                         crypto::RsaPublicKey& integrity_ca_key) {
        std::map<std::string, Bytes> files;
        if (!opt_.notification.empty())
            load_rrdp(files);
        else
            load_rsync(files);

        auto need = [&](const std::string& name) -> const Bytes& {
            auto it = files.find(name);
            if (it == files.end()) throw std::runtime_error("repository misses " + name);
            return it->second;
        };
        fuzz_ca_key = cert_public_key(need("ta/fuzz.cer"));
        integrity_ca_key = cert_public_key(need("ta/integrity.cer"));
        if (files.count("integrity/test.roa")) test_roa = files["integrity/test.roa"];

        // batch objects in manifest order, hashes checked against the listing
        const Bytes& mft = need("fuzz/fuzz.mft");
        for (const auto& [name, hash] : manifest_file_list(mft)) {
            if (name == "fuzz.crl") continue;
            auto it = files.find("fuzz/" + name);
            if (it == files.end()) continue;
            LoadedObject obj;
            obj.name = name;
            obj.bytes = it->second;
            obj.hash_ok = sha256(obj.bytes) == hash;
            objects.push_back(std::move(obj));
        }
    }

    void load_rsync(std::map<std::string, Bytes>& files) {
        namespace fs = std::filesystem;
        for (const auto& entry : fs::recursive_directory_iterator(opt_.rsync_root)) {
            if (!entry.is_regular_file()) continue;
            std::string rel = fs::relative(entry.path(), opt_.rsync_root).string();
            files[rel] = read_file(entry.path());
        }
    }

    void load_rrdp(std::map<std::string, Bytes>& files) {
        std::string notif = read_text_file(opt_.notification);
        auto attr = [](const std::string& xml, size_t from, const std::string& name)
            -> std::optional<std::string> {
            size_t pos = xml.find(name + "=\"", from);
            if (pos == std::string::npos) return std::nullopt;
            pos += name.size() + 2;
            size_t end = xml.find('"', pos);
            return xml.substr(pos, end - pos);
        };
        size_t snap_el = notif.find("<snapshot");
        if (snap_el == std::string::npos) throw std::runtime_error("notification has no snapshot");
        auto uri = attr(notif, snap_el, "uri");
        auto hash = attr(notif, snap_el, "hash");
        if (!uri || !hash) throw std::runtime_error("notification snapshot element incomplete");

        // resolve https://host/rrdp/<session>/<serial>/snapshot.xml next to the
        // notification file
        std::string tail = uri->substr(uri->find("/rrdp/") + 6);
        std::filesystem::path snap_path = opt_.notification.parent_path() / tail;
        Bytes snap_bytes = read_file(snap_path);
        if (hex_encode_upper(sha256(snap_bytes)) != *hash)
            std::fprintf(stderr, "warning: rrdp snapshot hash mismatch\n");

        std::string xml = to_string(snap_bytes);
        size_t pos = 0;
        while ((pos = xml.find("<publish uri=\"", pos)) != std::string::npos) {
            size_t uri_start = pos + 14;
            size_t uri_end = xml.find('"', uri_start);
            std::string puri = xml.substr(uri_start, uri_end - uri_start);
            size_t b64_start = xml.find('>', uri_end) + 1;
            size_t b64_end = xml.find("</publish>", b64_start);
            // pp-relative name: strip rsync://host/repo/
            size_t repo_pos = puri.find("/repo/");
            std::string rel = repo_pos == std::string::npos ? puri : puri.substr(repo_pos + 6);
            files[rel] = base64_decode(xml.substr(b64_start, b64_end - b64_start));
            pos = b64_end;
        }
    }

    static crypto::RsaPublicKey cert_public_key(const Bytes& cert_der) {
        auto parsed = asn1::parse_der(cert_der);
        const asn1::TlvNode* spki = parsed.root.child_at({0, 6});
        if (!spki) throw std::runtime_error("certificate has no SPKI");
        return crypto::parse_spki(asn1::encode_der(*spki));
    }

    static std::vector<std::pair<std::string, Bytes>> manifest_file_list(const Bytes& mft) {
        std::vector<std::pair<std::string, Bytes>> out;
        auto parsed = asn1::parse_der(mft);
        const asn1::TlvNode* payload = parsed.root.child_at({1, 0, 2, 1, 0, 0});
        if (!payload || payload->children.size() < 5) return out;
        for (const auto& entry : payload->children[4].children) {
            if (entry.children.size() < 2) continue;
            std::string name = to_string(entry.children[0].value);
            Bytes bits = asn1::encode_content(entry.children[1]);
            if (bits.size() != 33) continue;
            out.emplace_back(name, Bytes(bits.begin() + 1, bits.end()));
        }
        return out;
    }

    static std::vector<rpki::VrpTriple> extract_vrps(const Bytes& object) {
        std::vector<rpki::VrpTriple> out;
        auto parsed = asn1::parse_der(object);
        const asn1::TlvNode* payload = parsed.root.child_at({1, 0, 2, 1, 0, 0});
        if (!payload || payload->children.size() < 2) return out;
        const asn1::TlvNode& as_node = payload->children[0];
        if (as_node.tag_number != asn1::tag::integer) return out;
        uint64_t asn = asn1::read_uint(as_node);
        for (const auto& family : payload->children[1].children) {
            if (family.children.size() < 2) continue;
            const Bytes& afi = family.children[0].value;
            bool v4 = afi.size() == 2 && afi[0] == 0 && afi[1] == 1;
            for (const auto& addr : family.children[1].children) {
                if (addr.children.empty()) continue;
                const asn1::TlvNode& bits_node = addr.children[0];
                Bytes content = asn1::encode_content(bits_node);
                if (content.empty()) continue;
                uint8_t unused = content[0];
                size_t bit_len = (content.size() - 1) * 8 - std::min<size_t>(unused, 7);
                rpki::RoaPrefix prefix;
                prefix.family = v4 ? 1 : 2;
                prefix.prefix_len = static_cast<uint8_t>(bit_len);
                prefix.address.assign(content.begin() + 1, content.end());
                rpki::VrpTriple vrp;
                vrp.asn = asn;
                vrp.prefix = rpki::prefix_to_string(prefix);
                vrp.max_length = prefix.prefix_len;
                if (addr.children.size() > 1 &&
                    addr.children[1].tag_number == asn1::tag::integer)
                    vrp.max_length = static_cast<uint32_t>(asn1::read_uint(addr.children[1]));
                out.push_back(std::move(vrp));
            }
        }
        return out;
    }

    void write_output(const std::vector<rpki::VrpTriple>& accepted) {
        if (opt_.output_file.empty()) return;
        std::ofstream out(opt_.output_file, std::ios::trunc);
        out << "asn,prefix,max_length\n";
        for (const auto& vrp : accepted) out << vrp.to_line() << "\n";
    }

    void write_truth() {
        if (opt_.truth_file.empty()) return;
        std::ofstream out(opt_.truth_file, std::ios::trunc);
        for (size_t i = 0; i < truth_counts_.size(); ++i)
            if (truth_counts_[i])
                out << i << " " << truth_counts_[i] << " " << truth_first_object_[i] << "\n";
    }

    Options opt_;
    cov::SharedRegion region_;
    bool stalled_ = false;
    std::vector<uint64_t> truth_counts_;
    std::vector<uint32_t> truth_first_object_;
};

}  // namespace derfuzz::sim
