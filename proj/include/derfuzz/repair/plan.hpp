#pragma once

#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "derfuzz/asn1/label.hpp"
#include "derfuzz/bytes.hpp"

namespace derfuzz::repair {

enum class RuleKind {
    copy_from,
    content_digest,
    signature_over,
    key_id,
    parent_key_id,
    uri,
    serial,
    validity_window,
};

struct RepairRule {
    std::string target_label;
    RuleKind kind;
    std::vector<std::string> args;
};

/// Ordered recompute rules for one object kind; listed leaf-to-root so inner
/// signatures are finalized before anything that digests them.
struct RepairPlan {
    asn1::ObjectKind object_kind = asn1::ObjectKind::generic;
    std::vector<RepairRule> rules;
};

inline RuleKind rule_kind_from_name(const std::string& s) {
    if (s == "copy_from") return RuleKind::copy_from;
    if (s == "content_digest") return RuleKind::content_digest;
    if (s == "signature_over") return RuleKind::signature_over;
    if (s == "key_id") return RuleKind::key_id;
    if (s == "parent_key_id") return RuleKind::parent_key_id;
    if (s == "uri") return RuleKind::uri;
    if (s == "serial") return RuleKind::serial;
    if (s == "validity_window") return RuleKind::validity_window;
    throw std::runtime_error("unknown repair rule: " + s);
}

inline RepairPlan parse_plan(const std::string& text, asn1::ObjectKind kind) {
    RepairPlan plan;
    plan.object_kind = kind;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        RepairRule rule;
        std::string kind_word;
        if (!(ls >> rule.target_label >> kind_word)) continue;
        rule.kind = rule_kind_from_name(kind_word);
        std::string arg;
        while (ls >> arg) rule.args.push_back(arg);
        plan.rules.push_back(std::move(rule));
    }
    return plan;
}

}  // namespace derfuzz::repair
