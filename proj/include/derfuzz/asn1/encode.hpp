#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "derfuzz/asn1/tlv.hpp"
#include "derfuzz/bytes.hpp"

namespace derfuzz::asn1 {

class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Bytes canonical_tag_bytes(const TlvNode& n) {
    uint8_t lead = static_cast<uint8_t>(static_cast<uint8_t>(n.tag_class) << 6) |
                   (n.constructed ? 0x20 : 0x00);
    if (n.tag_number < 31) return {static_cast<uint8_t>(lead | n.tag_number)};
    Bytes out{static_cast<uint8_t>(lead | 0x1f)};
    Bytes digits;
    uint64_t v = n.tag_number;
    do {
        digits.push_back(static_cast<uint8_t>(v & 0x7f));
        v >>= 7;
    } while (v);
    for (size_t i = digits.size(); i-- > 0;)
        out.push_back(static_cast<uint8_t>(digits[i] | (i ? 0x80 : 0x00)));
    return out;
}

inline Bytes minimal_length_bytes(uint64_t len) {
    if (len < 0x80) return {static_cast<uint8_t>(len)};
    Bytes digits;
    uint64_t v = len;
    while (v) {
        digits.push_back(static_cast<uint8_t>(v & 0xff));
        v >>= 8;
    }
    Bytes out{static_cast<uint8_t>(0x80 | digits.size())};
    for (size_t i = digits.size(); i-- > 0;) out.push_back(digits[i]);
    return out;
}

struct Splice {
    size_t offset;
    size_t length;
    Bytes replacement;
};

inline size_t content_length(const TlvNode& n);

inline size_t total_length(const TlvNode& n) {
    if (n.opaque) return n.value.size();
    size_t content = content_length(n);
    return canonical_tag_bytes(n).size() + minimal_length_bytes(content).size() + content;
}

inline size_t content_length(const TlvNode& n) {
    if (n.has_children()) {
        size_t total = n.value_prefix.size();
        for (const auto& c : n.children) total += total_length(c);
        return total;
    }
    return n.value.size();
}

inline void emit(const TlvNode& n, Bytes& out, std::vector<Splice>& splices) {
    bool has_override = n.tag_override || n.length_override || n.length_form_override;
    if (n.opaque) {
        if (has_override)
            throw EncodeError("override on opaque node " +
                              (n.label.empty() ? std::string("<unlabeled>") : n.label) +
                              " has no splice position");
        append(out, n.value);
        return;
    }
    Bytes tag = canonical_tag_bytes(n);
    size_t content = content_length(n);
    Bytes len = minimal_length_bytes(content);

    size_t tag_off = out.size();
    append(out, tag);
    size_t len_off = out.size();
    append(out, len);

    if (n.tag_override)
        splices.push_back({tag_off, tag.size(), *n.tag_override});
    if (n.length_form_override)
        splices.push_back({len_off, len.size(), *n.length_form_override});
    else if (n.length_override)
        splices.push_back({len_off, len.size(), minimal_length_bytes(*n.length_override)});

    if (n.has_children()) {
        append(out, n.value_prefix);
        for (const auto& c : n.children) emit(c, out, splices);
    } else {
        append(out, n.value);
    }
}

}  // namespace detail

/// Two-pass encode: pass 1 emits canonical DER with true lengths and tag
/// numbers, pass 2 splices tag/length overrides into the recorded offsets.
/// Splices are applied back-to-front so earlier offsets stay valid even when
/// a replacement changes the stream length.
inline Bytes encode_der(const TlvNode& root) {
    Bytes out;
    std::vector<detail::Splice> splices;
    detail::emit(root, out, splices);
    std::sort(splices.begin(), splices.end(),
              [](const auto& a, const auto& b) { return a.offset > b.offset; });
    for (const auto& s : splices) {
        if (s.offset + s.length > out.size())
            throw EncodeError("splice at offset " + std::to_string(s.offset) +
                              " out of stream bounds");
        out.erase(out.begin() + static_cast<ptrdiff_t>(s.offset),
                  out.begin() + static_cast<ptrdiff_t>(s.offset + s.length));
        out.insert(out.begin() + static_cast<ptrdiff_t>(s.offset), s.replacement.begin(),
                   s.replacement.end());
    }
    return out;
}

/// Structural equality: tag class/number, constructed flag, content and child
/// order. Labels, taint and overrides are ignored, and a primitive that was
/// expanded into children compares equal to the unexpanded form of the same
/// bytes.
inline bool structural_equal(const TlvNode& a, const TlvNode& b);

/// Encoded bytes of a node's content only (no header). Used for digests over
/// eContent-style wrapped values.
inline Bytes encode_content(const TlvNode& n) {
    if (n.opaque) return n.value;
    if (!n.has_children()) return n.value;
    Bytes out = n.value_prefix;
    std::vector<detail::Splice> splices;
    size_t base = out.size();
    for (const auto& c : n.children) detail::emit(c, out, splices);
    std::sort(splices.begin(), splices.end(),
              [](const auto& a, const auto& b) { return a.offset > b.offset; });
    for (const auto& s : splices) {
        if (s.offset + s.length > out.size()) throw EncodeError("splice out of bounds");
        out.erase(out.begin() + static_cast<ptrdiff_t>(s.offset),
                  out.begin() + static_cast<ptrdiff_t>(s.offset + s.length));
        out.insert(out.begin() + static_cast<ptrdiff_t>(s.offset), s.replacement.begin(),
                   s.replacement.end());
    }
    (void)base;
    return out;
}

inline bool structural_equal(const TlvNode& a, const TlvNode& b) {
    if (a.opaque != b.opaque) return false;
    if (a.opaque) return a.value == b.value;
    if (a.tag_class != b.tag_class || a.tag_number != b.tag_number ||
        a.constructed != b.constructed)
        return false;
    if (a.constructed) {
        if (a.children.size() != b.children.size()) return false;
        for (size_t i = 0; i < a.children.size(); ++i)
            if (!structural_equal(a.children[i], b.children[i])) return false;
        return true;
    }
    if (a.encapsulated == b.encapsulated && !a.encapsulated) return a.value == b.value;
    return encode_content(a) == encode_content(b);
}

}  // namespace derfuzz::asn1
