#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "derfuzz/asn1/tlv.hpp"

namespace derfuzz::asn1 {

enum class ObjectKind {
    roa,
    manifest,
    crl,
    ca_certificate,
    ee_certificate,
    aspa,
    gbr,
    tal,
    generic,
};

inline std::string kind_name(ObjectKind k) {
    switch (k) {
        case ObjectKind::roa: return "roa";
        case ObjectKind::manifest: return "manifest";
        case ObjectKind::crl: return "crl";
        case ObjectKind::ca_certificate: return "ca_certificate";
        case ObjectKind::ee_certificate: return "ee_certificate";
        case ObjectKind::aspa: return "aspa";
        case ObjectKind::gbr: return "gbr";
        case ObjectKind::tal: return "tal";
        case ObjectKind::generic: return "generic";
    }
    return "generic";
}

inline ObjectKind kind_from_name(const std::string& s) {
    if (s == "roa") return ObjectKind::roa;
    if (s == "manifest" || s == "mft") return ObjectKind::manifest;
    if (s == "crl") return ObjectKind::crl;
    if (s == "ca_certificate" || s == "cer") return ObjectKind::ca_certificate;
    if (s == "ee_certificate") return ObjectKind::ee_certificate;
    if (s == "aspa" || s == "asa") return ObjectKind::aspa;
    if (s == "gbr") return ObjectKind::gbr;
    if (s == "tal") return ObjectKind::tal;
    return ObjectKind::generic;
}

inline ObjectKind kind_from_extension(const std::string& ext) {
    if (ext == ".roa") return ObjectKind::roa;
    if (ext == ".mft") return ObjectKind::manifest;
    if (ext == ".crl") return ObjectKind::crl;
    if (ext == ".cer") return ObjectKind::ca_certificate;
    if (ext == ".asa") return ObjectKind::aspa;
    if (ext == ".gbr") return ObjectKind::gbr;
    return ObjectKind::generic;
}

/// One step of a tree-position pattern: a child index plus an optional tag
/// guard that the selected node must satisfy.
struct PatternStep {
    size_t index = 0;
    bool has_guard = false;
    TagClass guard_class = TagClass::universal;
    uint64_t guard_number = 0;
};

struct LabelPattern {
    std::vector<PatternStep> steps;  // empty = the root itself
    std::string label;
};

/// Position-pattern labeling rules for one object kind, loaded from a
/// human-editable text file: one `path label` pair per line, `#` comments,
/// path steps `index[:tag]` joined with `/`, `.` for the root.
struct LabelSchema {
    ObjectKind object_kind = ObjectKind::generic;
    std::vector<LabelPattern> paths;
};

namespace detail {

inline bool guard_from_name(const std::string& name, TagClass& cls, uint64_t& number) {
    static const std::map<std::string, uint64_t> universal = {
        {"bool", tag::boolean},     {"int", tag::integer},
        {"bit", tag::bit_string},   {"oct", tag::octet_string},
        {"null", tag::null},        {"oid", tag::oid},
        {"utf8", tag::utf8_string}, {"seq", tag::sequence},
        {"set", tag::set},          {"print", tag::printable_string},
        {"ia5", tag::ia5_string},   {"utc", tag::utc_time},
        {"gen", tag::generalized_time},
    };
    if (auto it = universal.find(name); it != universal.end()) {
        cls = TagClass::universal;
        number = it->second;
        return true;
    }
    if (name.size() >= 2 && (name[0] == 'c' || name[0] == 'a')) {
        cls = name[0] == 'c' ? TagClass::context : TagClass::application;
        number = std::stoull(name.substr(1));
        return true;
    }
    return false;
}

}  // namespace detail

inline LabelSchema parse_schema(const std::string& text) {
    LabelSchema schema;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string first, second;
        if (!(ls >> first)) continue;
        if (first == "kind") {
            ls >> second;
            schema.object_kind = kind_from_name(second);
            continue;
        }
        if (!(ls >> second))
            throw std::runtime_error("schema line " + std::to_string(lineno) +
                                     ": expected `path label`");
        LabelPattern pat;
        pat.label = second;
        if (!seen.insert(second).second)
            throw std::runtime_error("schema line " + std::to_string(lineno) +
                                     ": duplicate label " + second);
        if (first != ".") {
            size_t pos = 0;
            while (pos < first.size()) {
                size_t slash = first.find('/', pos);
                if (slash == std::string::npos) slash = first.size();
                std::string step = first.substr(pos, slash - pos);
                pos = slash + 1;
                PatternStep ps;
                size_t colon = step.find(':');
                ps.index = std::stoull(step.substr(0, colon));
                if (colon != std::string::npos) {
                    ps.has_guard = true;
                    if (!detail::guard_from_name(step.substr(colon + 1), ps.guard_class,
                                                 ps.guard_number))
                        throw std::runtime_error("schema line " + std::to_string(lineno) +
                                                 ": unknown tag guard in " + step);
                }
                pat.steps.push_back(ps);
            }
        }
        schema.paths.push_back(std::move(pat));
    }
    return schema;
}

inline const TlvNode* resolve_pattern(const TlvNode& root, const LabelPattern& pat) {
    const TlvNode* node = &root;
    for (const auto& step : pat.steps) {
        if (step.index >= node->children.size()) return nullptr;
        node = &node->children[step.index];
        if (step.has_guard &&
            (node->tag_class != step.guard_class || node->tag_number != step.guard_number))
            return nullptr;
    }
    return node;
}

/// Best-effort structural labeling. Matched nodes get the schema label
/// (patterns in listed order, first assignment wins per node); everything
/// else keeps whatever label it already carries. Never fails, whatever the
/// tree looks like.
inline void label_tree(TlvNode& root, const LabelSchema& schema) {
    std::set<const TlvNode*> assigned;
    for (const auto& pat : schema.paths) {
        const TlvNode* found = resolve_pattern(root, pat);
        if (!found) continue;
        if (assigned.count(found)) continue;
        const_cast<TlvNode*>(found)->label = pat.label;
        assigned.insert(found);
    }
}

}  // namespace derfuzz::asn1
