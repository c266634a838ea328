#pragma once

#include <string>
#include <vector>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/asn1/parse.hpp"
#include "derfuzz/asn1/values.hpp"
#include "derfuzz/crypto/rsa.hpp"
#include "derfuzz/hash.hpp"
#include "derfuzz/repair/plan.hpp"
#include "derfuzz/rpki/context.hpp"
#include "derfuzz/rpki/oids.hpp"

namespace derfuzz::repair {

using asn1::TlvNode;

/// Mark every ancestor of a tainted node. Encoded lengths are recomputed from
/// true content sizes at encode time for everything that does not carry a
/// protected length override, so taint only needs to reach upward here.
/// Returns the number of newly tainted ancestors.
inline size_t propagate_taint(TlvNode& root) {
    size_t newly = 0;
    std::function<bool(TlvNode&)> visit = [&](TlvNode& n) {
        bool subtree_tainted = n.tainted;
        for (auto& c : n.children)
            if (visit(c)) subtree_tainted = true;
        if (subtree_tainted && !n.tainted) {
            n.tainted = true;
            ++newly;
        }
        return subtree_tainted;
    };
    visit(root);
    return newly;
}

struct RepairOutcome {
    std::vector<std::string> applied;
    std::vector<std::string> skipped_protected;
    std::vector<std::string> diagnostics;
};

namespace detail {

/// Content bits of a BIT STRING node without the unused-bits octet.
inline Bytes bit_string_bits(const TlvNode& n) {
    Bytes content = asn1::encode_content(n);
    if (content.empty()) return content;
    return Bytes(content.begin() + 1, content.end());
}

inline void set_bit_string_bits(TlvNode& n, const Bytes& bits) {
    Bytes v{0x00};
    append(v, bits);
    n.set_value(std::move(v));
}

/// Replace a node's content with a parsed DER blob while keeping its label
/// and position.
inline void replace_subtree(TlvNode& node, const Bytes& der) {
    auto parsed = asn1::parse_der(der);
    std::string label = node.label;
    bool tainted = node.tainted;
    node = parsed.root;
    node.label = label;
    node.tainted = true;
    (void)tainted;
}

inline Bytes signature_input(const TlvNode& src, const std::string& mode) {
    if (mode == "set_retag") {
        // CMS signs the signedAttrs under their SET OF tag, not the
        // [0] IMPLICIT tag they are transmitted with
        TlvNode copy = src;
        copy.tag_class = asn1::TagClass::universal;
        copy.tag_number = asn1::tag::set;
        copy.constructed = true;
        copy.tag_override.reset();
        return asn1::encode_der(copy);
    }
    return asn1::encode_der(src);
}

}  // namespace detail

/// Recompute every plan rule whose target exists and is not protected.
/// Unlocatable labels are skipped with a diagnostic; nothing here is fatal.
inline RepairOutcome repair_fields(TlvNode& root, const RepairPlan& plan,
                                   const rpki::RepairContext& ctx) {
    RepairOutcome out;
    auto econtent_oid_for = [&]() -> std::string {
        switch (plan.object_kind) {
            case asn1::ObjectKind::manifest: return rpki::oids::ct_manifest;
            case asn1::ObjectKind::aspa: return rpki::oids::ct_aspa;
            case asn1::ObjectKind::gbr: return rpki::oids::ct_gbr;
            default: return rpki::oids::ct_roa;
        }
    };
    for (const auto& rule : plan.rules) {
        auto pos = asn1::find_by_label(root, rule.target_label);
        if (!pos) {
            out.diagnostics.push_back("skip " + rule.target_label + ": label not found");
            continue;
        }
        TlvNode* node = root.child_at(*pos);
        if (node->protected_) {
            out.skipped_protected.push_back(rule.target_label);
            continue;
        }
        try {
            switch (rule.kind) {
                case RuleKind::copy_from: {
                    const std::string& src = rule.args.at(0);
                    if (src == "econtent_oid") {
                        node->set_value(asn1::oid_encode(econtent_oid_for()));
                    } else if (src == "signing_time") {
                        node->set_value(to_bytes(ctx.clock.signing_time_utc));
                    } else if (src == "clock_not_before") {
                        node->set_value(to_bytes(ctx.clock.not_before_utc));
                    } else if (src == "clock_not_after") {
                        node->set_value(to_bytes(ctx.clock.not_after_utc));
                    } else if (src == "one_off_spki") {
                        detail::replace_subtree(*node,
                                                crypto::spki_der(ctx.keys.one_off->pub));
                    } else if (src == "ca_subject") {
                        detail::replace_subtree(*node, ctx.ca_subject_der);
                    } else if (src.rfind("node:", 0) == 0) {
                        auto other = asn1::find_by_label(root, src.substr(5));
                        if (!other) {
                            out.diagnostics.push_back("skip " + rule.target_label +
                                                      ": source " + src + " not found");
                            continue;
                        }
                        node->set_value(asn1::encode_content(*root.child_at(*other)));
                    } else {
                        out.diagnostics.push_back("skip " + rule.target_label +
                                                  ": unknown source " + src);
                        continue;
                    }
                    break;
                }
                case RuleKind::content_digest: {
                    auto src = asn1::find_by_label(root, rule.args.at(0));
                    if (!src) {
                        out.diagnostics.push_back("skip " + rule.target_label +
                                                  ": digest source not found");
                        continue;
                    }
                    const TlvNode* src_node = root.child_at(*src);
                    bool over_content = rule.args.size() > 1 && rule.args[1] == "content";
                    Bytes message = over_content ? asn1::encode_content(*src_node)
                                                 : asn1::encode_der(*src_node);
                    node->set_value(sha256(message));
                    break;
                }
                case RuleKind::signature_over: {
                    auto src = asn1::find_by_label(root, rule.args.at(0));
                    if (!src) {
                        out.diagnostics.push_back("skip " + rule.target_label +
                                                  ": signature source not found");
                        continue;
                    }
                    const crypto::RsaKeyPair* key =
                        rule.args.at(1) == "one_off" ? ctx.keys.one_off : ctx.keys.ca;
                    std::string mode = rule.args.size() > 2 ? rule.args[2] : "tlv";
                    Bytes message = detail::signature_input(*root.child_at(*src), mode);
                    Bytes sig = crypto::rsa_sign_sha256(*key, message);
                    if (node->tag_class == asn1::TagClass::universal &&
                        node->tag_number == asn1::tag::bit_string)
                        detail::set_bit_string_bits(*node, sig);
                    else
                        node->set_value(std::move(sig));
                    break;
                }
                case RuleKind::key_id: {
                    auto spki = asn1::find_by_label(root, rule.args.at(0));
                    if (!spki) {
                        out.diagnostics.push_back("skip " + rule.target_label +
                                                  ": SPKI not found");
                        continue;
                    }
                    const TlvNode* spki_node = root.child_at(*spki);
                    if (spki_node->children.size() < 2) {
                        out.diagnostics.push_back("skip " + rule.target_label +
                                                  ": SPKI has no key bits");
                        continue;
                    }
                    node->set_value(sha1(detail::bit_string_bits(spki_node->children[1])));
                    break;
                }
                case RuleKind::parent_key_id:
                    node->set_value(ctx.keys.ca_key_id());
                    break;
                case RuleKind::uri: {
                    const std::string& which = rule.args.at(0);
                    std::string uri = which == "crl"       ? ctx.crl_uri
                                      : which == "object"  ? ctx.object_uri
                                      : which == "ca_cert" ? ctx.ca_cert_uri
                                      : which == "manifest" ? ctx.manifest_uri
                                                            : ctx.ca_repo_uri;
                    node->set_value(to_bytes(uri));
                    break;
                }
                case RuleKind::serial:
                    node->set_value(asn1::integer_bytes(ctx.ee_serial));
                    break;
                case RuleKind::validity_window: {
                    if (node->children.size() < 2) {
                        out.diagnostics.push_back("skip " + rule.target_label +
                                                  ": no validity children");
                        continue;
                    }
                    if (!node->children[0].protected_)
                        node->children[0].set_value(to_bytes(ctx.clock.not_before_utc));
                    if (!node->children[1].protected_)
                        node->children[1].set_value(to_bytes(ctx.clock.not_after_utc));
                    node->tainted = true;
                    break;
                }
            }
            out.applied.push_back(rule.target_label);
        } catch (const std::exception& e) {
            out.diagnostics.push_back("skip " + rule.target_label + ": " + e.what());
        }
    }
    propagate_taint(root);
    return out;
}

/// Crypto-only subset of a plan: key identifiers, digests and both signature
/// layers. Fresh generator output runs through this to become verifiable;
/// trees lacking the signature labels are left alone with a diagnostic.
inline RepairOutcome sign_object(TlvNode& root, const RepairPlan& plan,
                                 const rpki::RepairContext& ctx) {
    RepairPlan crypto_only;
    crypto_only.object_kind = plan.object_kind;
    for (const auto& rule : plan.rules) {
        switch (rule.kind) {
            case RuleKind::copy_from:
                if (rule.args.empty() ||
                    (rule.args[0] != "one_off_spki" && rule.args[0].rfind("node:", 0) != 0))
                    continue;
                [[fallthrough]];
            case RuleKind::content_digest:
            case RuleKind::signature_over:
            case RuleKind::key_id:
            case RuleKind::parent_key_id:
                crypto_only.rules.push_back(rule);
                break;
            default: break;
        }
    }
    return repair_fields(root, crypto_only, ctx);
}

}  // namespace derfuzz::repair
