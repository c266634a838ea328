#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "derfuzz/asn1/tag.hpp"
#include "derfuzz/bytes.hpp"

namespace derfuzz::asn1 {

/// Path of child indices from the root to a node.
using NodePath = std::vector<size_t>;

inline std::string path_to_string(const NodePath& p) {
    std::string out;
    for (size_t i = 0; i < p.size(); ++i) {
        if (i) out.push_back('.');
        out += std::to_string(p[i]);
    }
    return out.empty() ? "." : out;
}

inline NodePath path_from_string(const std::string& s) {
    NodePath p;
    if (s == "." || s.empty()) return p;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t dot = s.find('.', pos);
        if (dot == std::string::npos) dot = s.size();
        p.push_back(static_cast<size_t>(std::stoull(s.substr(pos, dot - pos))));
        pos = dot + 1;
    }
    return p;
}

/// One tag-length-value element of a DER object.
///
/// A node is either primitive (content in `value`) or holds `children`;
/// `encapsulated` marks a primitive whose content parsed as complete DER and
/// was expanded into children (eContent, extension values, wrapped key bits).
/// `opaque` marks bytes the parser gave up on: `value` holds the raw element
/// including its header and is re-emitted verbatim.
///
/// `tag_override` and `length_override*` carry structure-breaking mutations;
/// the encoder produces canonical DER first and splices these in afterwards.
struct TlvNode {
    TagClass tag_class = TagClass::universal;
    bool constructed = false;
    uint64_t tag_number = 0;

    std::optional<uint64_t> length_override;   // declared length value to emit
    std::optional<Bytes> length_form_override; // raw length bytes (indefinite, non-minimal forms)
    std::optional<Bytes> tag_override;         // raw tag bytes emitted verbatim

    Bytes value;
    std::vector<TlvNode> children;
    Bytes value_prefix;  // bit string unused-bits byte when encapsulated

    bool encapsulated = false;
    bool opaque = false;

    std::string label;
    bool tainted = false;
    bool protected_ = false;
    bool breaking = false;

    bool has_children() const { return constructed || encapsulated; }

    /// Turn the node back into a plain primitive holding `v`, dropping any
    /// expanded children. Marks it tainted since the encoded length may move.
    void set_value(Bytes v) {
        value = std::move(v);
        children.clear();
        value_prefix.clear();
        constructed = false;
        encapsulated = false;
        opaque = false;
        tainted = true;
    }

    TlvNode* child_at(const NodePath& path, size_t depth = 0) {
        if (depth == path.size()) return this;
        if (path[depth] >= children.size()) return nullptr;
        return children[path[depth]].child_at(path, depth + 1);
    }
    const TlvNode* child_at(const NodePath& path, size_t depth = 0) const {
        if (depth == path.size()) return this;
        if (path[depth] >= children.size()) return nullptr;
        return children[path[depth]].child_at(path, depth + 1);
    }
};

inline size_t node_count(const TlvNode& n) {
    size_t total = 1;
    for (const auto& c : n.children) total += node_count(c);
    return total;
}

/// Pre-order walk with the path of each node. Return false from the visitor
/// to stop early; walk() then returns false.
inline bool walk(TlvNode& n, const std::function<bool(TlvNode&, const NodePath&)>& fn,
                 NodePath& path) {
    if (!fn(n, path)) return false;
    for (size_t i = 0; i < n.children.size(); ++i) {
        path.push_back(i);
        if (!walk(n.children[i], fn, path)) return false;
        path.pop_back();
    }
    return true;
}

inline bool walk(TlvNode& n, const std::function<bool(TlvNode&, const NodePath&)>& fn) {
    NodePath path;
    return walk(n, fn, path);
}

inline bool walk(const TlvNode& n,
                 const std::function<bool(const TlvNode&, const NodePath&)>& fn) {
    NodePath path;
    return walk(const_cast<TlvNode&>(n),
                [&](TlvNode& node, const NodePath& p) { return fn(node, p); }, path);
}

/// Depth-first search for an exact label. Labels travel with nodes, so a
/// spliced-in subtree stays findable wherever it lands.
inline std::optional<NodePath> find_by_label(const TlvNode& root, std::string_view label) {
    std::optional<NodePath> found;
    walk(root, [&](const TlvNode& n, const NodePath& p) {
        if (n.label == label) {
            found = p;
            return false;
        }
        return true;
    });
    return found;
}

inline std::string describe(const TlvNode& n) {
    std::string s = tag_name(n.tag_class, n.tag_number);
    if (!n.label.empty()) s += " (" + n.label + ")";
    return s;
}

}  // namespace derfuzz::asn1
