#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "derfuzz/bytes.hpp"

namespace derfuzz::sim {

/// Predicate over an object's raw bytes.
struct Predicate {
    enum class Kind { always, contains, byte_at, size_gt } kind = Kind::always;
    Bytes needle;
    size_t offset = 0;
    uint8_t value = 0;
    size_t size = 0;

    bool matches(ByteView object) const {
        switch (kind) {
            case Kind::always: return true;
            case Kind::contains:
                if (needle.empty()) return false;
                return std::search(object.begin(), object.end(), needle.begin(),
                                   needle.end()) != object.end();
            case Kind::byte_at:
                return offset < object.size() && object[offset] == value;
            case Kind::size_gt: return object.size() > size;
        }
        return false;
    }

    static Predicate from_json(const nlohmann::json& j) {
        Predicate p;
        std::string kind = j.value("kind", "always");
        if (kind == "contains") {
            p.kind = Kind::contains;
            p.needle = hex_decode(j.at("hex").get<std::string>());
        } else if (kind == "byte_at") {
            p.kind = Kind::byte_at;
            p.offset = j.at("offset").get<size_t>();
            p.value = static_cast<uint8_t>(j.at("value").get<unsigned>());
        } else if (kind == "size_gt") {
            p.kind = Kind::size_gt;
            p.size = j.at("size").get<size_t>();
        }
        return p;
    }
};

/// One per-object processing loop; its head counter fires exactly once per
/// object and is the ground-truth identification counter for that phase.
struct PhaseLoop {
    std::string name;
    uint32_t head_counter = 0;
    uint32_t work_us = 0;
};

struct BranchRule {
    size_t phase = SIZE_MAX;  // SIZE_MAX = last phase
    Predicate trigger;
    std::vector<uint32_t> counters;
};

struct Decoy {
    enum class Mode { plus_one, minus_one, constant } mode = Mode::constant;
    uint32_t counter = 0;
    uint64_t value = 0;
};

struct DeepStage {
    Bytes marker;
    std::vector<uint32_t> counters;
};

struct PlantedBug {
    enum class Effect { crash, stall, drop_test_roa, deep_branch } effect = Effect::crash;
    Predicate trigger;
    uint64_t stall_ms = 0;
    std::vector<DeepStage> stages;  // deep_branch only
};

struct SimConfig {
    size_t map_size = 65536;
    std::string shm_env_var = "DERFUZZ_SHM";
    uint64_t setup_ms = 0;
    std::vector<PhaseLoop> loops{{"download", 100, 0}, {"validate", 200, 0}};
    std::vector<Decoy> decoys;
    std::vector<BranchRule> branch_rules;
    struct HotCounter {
        uint32_t counter;
        uint64_t total;
    };
    std::vector<HotCounter> hot_counters;
    std::vector<PlantedBug> bugs;
    bool verify_signatures = true;
    bool check_manifest_hashes = true;
    Predicate reject_rule;  // extra acceptance filter for consistency variants
    bool reject_rule_enabled = false;

    static SimConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

inline SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    c.map_size = j.value("map_size", c.map_size);
    c.shm_env_var = j.value("shm_env_var", c.shm_env_var);
    c.setup_ms = j.value("setup_ms", c.setup_ms);
    c.verify_signatures = j.value("verify_signatures", c.verify_signatures);
    c.check_manifest_hashes = j.value("check_manifest_hashes", c.check_manifest_hashes);
    if (j.contains("loops")) {
        c.loops.clear();
        for (const auto& l : j["loops"])
            c.loops.push_back({l.value("name", std::string("loop")),
                               l.at("head_counter").get<uint32_t>(),
                               l.value("work_us", 0u)});
    }
    if (j.contains("decoys"))
        for (const auto& d : j["decoys"]) {
            Decoy decoy;
            std::string mode = d.value("mode", "constant");
            decoy.mode = mode == "plus_one"    ? Decoy::Mode::plus_one
                         : mode == "minus_one" ? Decoy::Mode::minus_one
                                               : Decoy::Mode::constant;
            decoy.counter = d.at("counter").get<uint32_t>();
            decoy.value = d.value("value", 0ull);
            c.decoys.push_back(decoy);
        }
    if (j.contains("branch_rules"))
        for (const auto& r : j["branch_rules"]) {
            BranchRule rule;
            rule.phase = r.value("phase", SIZE_MAX);
            rule.trigger = Predicate::from_json(r.at("predicate"));
            for (const auto& ctr : r.at("counters")) rule.counters.push_back(ctr.get<uint32_t>());
            c.branch_rules.push_back(std::move(rule));
        }
    if (j.contains("hot_counters"))
        for (const auto& h : j["hot_counters"])
            c.hot_counters.push_back(
                {h.at("counter").get<uint32_t>(), h.at("total").get<uint64_t>()});
    if (j.contains("bugs"))
        for (const auto& b : j["bugs"]) {
            PlantedBug bug;
            std::string effect = b.value("effect", "crash");
            bug.effect = effect == "stall"           ? PlantedBug::Effect::stall
                         : effect == "drop_test_roa" ? PlantedBug::Effect::drop_test_roa
                         : effect == "deep_branch"   ? PlantedBug::Effect::deep_branch
                                                     : PlantedBug::Effect::crash;
            if (b.contains("trigger")) bug.trigger = Predicate::from_json(b["trigger"]);
            bug.stall_ms = b.value("stall_ms", 0ull);
            if (b.contains("stages"))
                for (const auto& s : b["stages"]) {
                    DeepStage stage;
                    stage.marker = hex_decode(s.at("marker_hex").get<std::string>());
                    for (const auto& ctr : s.at("counters"))
                        stage.counters.push_back(ctr.get<uint32_t>());
                    bug.stages.push_back(std::move(stage));
                }
            c.bugs.push_back(std::move(bug));
        }
    if (j.contains("reject_rule")) {
        c.reject_rule = Predicate::from_json(j["reject_rule"]);
        c.reject_rule_enabled = true;
    }
    return c;
}

inline nlohmann::json SimConfig::to_json() const {
    nlohmann::json j;
    j["map_size"] = map_size;
    j["shm_env_var"] = shm_env_var;
    j["setup_ms"] = setup_ms;
    j["verify_signatures"] = verify_signatures;
    j["check_manifest_hashes"] = check_manifest_hashes;
    auto pred_json = [](const Predicate& p) {
        nlohmann::json out;
        switch (p.kind) {
            case Predicate::Kind::always: out["kind"] = "always"; break;
            case Predicate::Kind::contains:
                out["kind"] = "contains";
                out["hex"] = hex_encode(p.needle);
                break;
            case Predicate::Kind::byte_at:
                out["kind"] = "byte_at";
                out["offset"] = p.offset;
                out["value"] = p.value;
                break;
            case Predicate::Kind::size_gt:
                out["kind"] = "size_gt";
                out["size"] = p.size;
                break;
        }
        return out;
    };
    j["loops"] = nlohmann::json::array();
    for (const auto& l : loops)
        j["loops"].push_back(
            {{"name", l.name}, {"head_counter", l.head_counter}, {"work_us", l.work_us}});
    j["decoys"] = nlohmann::json::array();
    for (const auto& d : decoys) {
        const char* mode = d.mode == Decoy::Mode::plus_one    ? "plus_one"
                           : d.mode == Decoy::Mode::minus_one ? "minus_one"
                                                              : "constant";
        j["decoys"].push_back({{"counter", d.counter}, {"mode", mode}, {"value", d.value}});
    }
    j["branch_rules"] = nlohmann::json::array();
    for (const auto& r : branch_rules) {
        nlohmann::json rule;
        if (r.phase != SIZE_MAX) rule["phase"] = r.phase;
        rule["predicate"] = pred_json(r.trigger);
        rule["counters"] = r.counters;
        j["branch_rules"].push_back(std::move(rule));
    }
    j["hot_counters"] = nlohmann::json::array();
    for (const auto& h : hot_counters)
        j["hot_counters"].push_back({{"counter", h.counter}, {"total", h.total}});
    j["bugs"] = nlohmann::json::array();
    for (const auto& b : bugs) {
        nlohmann::json bug;
        const char* effect = b.effect == PlantedBug::Effect::stall           ? "stall"
                             : b.effect == PlantedBug::Effect::drop_test_roa ? "drop_test_roa"
                             : b.effect == PlantedBug::Effect::deep_branch   ? "deep_branch"
                                                                             : "crash";
        bug["effect"] = effect;
        bug["trigger"] = pred_json(b.trigger);
        if (b.stall_ms) bug["stall_ms"] = b.stall_ms;
        if (!b.stages.empty()) {
            bug["stages"] = nlohmann::json::array();
            for (const auto& s : b.stages)
                bug["stages"].push_back(
                    {{"marker_hex", hex_encode(s.marker)}, {"counters", s.counters}});
        }
        j["bugs"].push_back(std::move(bug));
    }
    if (reject_rule_enabled) j["reject_rule"] = pred_json(reject_rule);
    return j;
}

}  // namespace derfuzz::sim
