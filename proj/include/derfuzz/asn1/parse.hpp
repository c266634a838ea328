#pragma once

#include <string>
#include <vector>

#include "derfuzz/asn1/tlv.hpp"
#include "derfuzz/bytes.hpp"

namespace derfuzz::asn1 {

struct ParseOptions {
    size_t max_depth = 64;
    size_t max_input = 16 * 1024 * 1024;
    // Expand OCTET STRING / BIT STRING content that itself parses as complete
    // strict DER (eContent, extension values, wrapped public keys).
    bool expand_encapsulated = true;
};

struct ParseResult {
    TlvNode root;
    std::vector<std::string> anomalies;
};

namespace detail {

struct Cursor {
    ByteView data;
    size_t pos = 0;

    size_t left() const { return data.size() - pos; }
    uint8_t peek() const { return data[pos]; }
    uint8_t take() { return data[pos++]; }
};

inline TlvNode opaque_rest(Cursor& cur, size_t start) {
    TlvNode n;
    n.opaque = true;
    n.value.assign(cur.data.begin() + static_cast<ptrdiff_t>(start), cur.data.end());
    cur.pos = cur.data.size();
    return n;
}

struct HeaderInfo {
    TagClass cls;
    bool constructed;
    uint64_t number;
    Bytes raw_tag;
    bool multibyte = false;
    uint64_t length = 0;
    bool indefinite = false;
    bool nonminimal_length = false;
    bool ok = false;
};

inline HeaderInfo read_header(Cursor& cur) {
    HeaderInfo h{};
    if (cur.left() == 0) return h;
    size_t start = cur.pos;
    uint8_t first = cur.take();
    h.cls = static_cast<TagClass>(first >> 6);
    h.constructed = (first & 0x20) != 0;
    h.number = first & 0x1f;
    if (h.number == 0x1f) {
        h.multibyte = true;
        h.number = 0;
        int taken = 0;
        for (;;) {
            if (cur.left() == 0 || taken > 4) return h;
            uint8_t b = cur.take();
            ++taken;
            h.number = h.number << 7 | (b & 0x7f);
            if ((b & 0x80) == 0) break;
        }
    }
    h.raw_tag.assign(cur.data.begin() + static_cast<ptrdiff_t>(start),
                     cur.data.begin() + static_cast<ptrdiff_t>(cur.pos));
    if (cur.left() == 0) return h;
    uint8_t lb = cur.take();
    if (lb < 0x80) {
        h.length = lb;
    } else if (lb == 0x80) {
        h.indefinite = true;
    } else {
        int n = lb & 0x7f;
        if (n > 8 || cur.left() < static_cast<size_t>(n)) return h;
        uint64_t len = 0;
        for (int i = 0; i < n; ++i) len = len << 8 | cur.take();
        h.length = len;
        // DER wants the shortest length form
        if (len < 0x80 || (n > 1 && (len >> (8 * (n - 1))) == 0)) h.nonminimal_length = true;
    }
    h.ok = true;
    return h;
}

inline bool subparse_strict(ByteView content, size_t depth, const ParseOptions& opt,
                            std::vector<TlvNode>& out);

inline TlvNode parse_element(Cursor& cur, size_t depth, const ParseOptions& opt,
                             std::vector<std::string>* anomalies) {
    auto note = [&](size_t at, const std::string& msg) {
        if (anomalies) anomalies->push_back("at byte " + std::to_string(at) + ": " + msg);
    };
    size_t start = cur.pos;
    if (depth >= opt.max_depth) {
        note(start, "maximum nesting depth exceeded");
        return opaque_rest(cur, start);
    }
    HeaderInfo h = read_header(cur);
    if (!h.ok) {
        note(start, "truncated or malformed header");
        return opaque_rest(cur, start);
    }
    if (h.indefinite) {
        note(start, "indefinite length");
        return opaque_rest(cur, start);
    }
    if (h.nonminimal_length) note(start, "non-minimal length encoding");
    if (h.length > cur.left()) {
        note(start, "length exceeds available content");
        return opaque_rest(cur, start);
    }

    TlvNode n;
    n.tag_class = h.cls;
    n.constructed = h.constructed;
    n.tag_number = h.number;
    if (h.multibyte) {
        // preserved verbatim so high-tag and padded-tag inputs survive
        // round-trips bit-exactly
        n.tag_override = h.raw_tag;
        n.breaking = true;
    }

    size_t content_start = cur.pos;
    size_t content_end = content_start + h.length;
    if (h.constructed) {
        Cursor inner{cur.data.first(content_end), content_start};
        while (inner.left() > 0)
            n.children.push_back(parse_element(inner, depth + 1, opt, anomalies));
        cur.pos = content_end;
        return n;
    }

    n.value.assign(cur.data.begin() + static_cast<ptrdiff_t>(content_start),
                   cur.data.begin() + static_cast<ptrdiff_t>(content_end));
    cur.pos = content_end;

    if (opt.expand_encapsulated && n.tag_class == TagClass::universal) {
        if (n.tag_number == tag::octet_string && n.value.size() >= 2) {
            std::vector<TlvNode> inner;
            if (subparse_strict(n.value, depth + 1, opt, inner)) {
                n.children = std::move(inner);
                n.encapsulated = true;
                n.value.clear();
            }
        } else if (n.tag_number == tag::bit_string && n.value.size() >= 3 && n.value[0] == 0) {
            std::vector<TlvNode> inner;
            ByteView bits(n.value.data() + 1, n.value.size() - 1);
            if (subparse_strict(bits, depth + 1, opt, inner)) {
                n.children = std::move(inner);
                n.encapsulated = true;
                n.value_prefix = {0};
                n.value.clear();
            }
        }
    }
    return n;
}

/// Accepts only clean, fully-consuming, minimal-form DER; used to decide
/// whether a primitive's content should be expanded into children.
inline bool subparse_strict(ByteView content, size_t depth, const ParseOptions& opt,
                            std::vector<TlvNode>& out) {
    if (depth >= opt.max_depth) return false;
    std::vector<std::string> local;
    Cursor cur{content, 0};
    while (cur.left() > 0) {
        size_t before = local.size();
        TlvNode n = parse_element(cur, depth, opt, &local);
        if (n.opaque || local.size() != before) return false;
        out.push_back(std::move(n));
    }
    return !out.empty();
}

}  // namespace detail

/// Schema-free total DER decode: any byte-sequence yields a tree, worst case
/// a single opaque primitive. Structural trouble never aborts the parse; it
/// is reported in the anomaly list.
inline ParseResult parse_der(ByteView input, const ParseOptions& opt = {}) {
    ParseResult result;
    if (input.empty()) {
        result.root.opaque = true;
        result.anomalies.push_back("empty input");
        return result;
    }
    if (input.size() > opt.max_input) {
        result.root.opaque = true;
        result.root.value.assign(input.begin(), input.end());
        result.anomalies.push_back("input exceeds size cap");
        return result;
    }
    detail::Cursor cur{input, 0};
    result.root = detail::parse_element(cur, 0, opt, &result.anomalies);
    if (cur.left() > 0)
        result.anomalies.push_back("trailing bytes after element (" +
                                   std::to_string(cur.left()) + ")");
    return result;
}

}  // namespace derfuzz::asn1
