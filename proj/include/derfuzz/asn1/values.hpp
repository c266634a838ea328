#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "derfuzz/asn1/tlv.hpp"

namespace derfuzz::asn1 {

inline TlvNode make_constructed(TagClass cls, uint64_t number, std::vector<TlvNode> children) {
    TlvNode n;
    n.tag_class = cls;
    n.tag_number = number;
    n.constructed = true;
    n.children = std::move(children);
    return n;
}

inline TlvNode make_primitive(TagClass cls, uint64_t number, Bytes value) {
    TlvNode n;
    n.tag_class = cls;
    n.tag_number = number;
    n.value = std::move(value);
    return n;
}

inline TlvNode seq(std::vector<TlvNode> children) {
    return make_constructed(TagClass::universal, tag::sequence, std::move(children));
}

inline TlvNode set_of(std::vector<TlvNode> children) {
    return make_constructed(TagClass::universal, tag::set, std::move(children));
}

inline TlvNode boolean(bool v) {
    return make_primitive(TagClass::universal, tag::boolean, {v ? uint8_t(0xff) : uint8_t(0x00)});
}

inline TlvNode null() { return make_primitive(TagClass::universal, tag::null, {}); }

/// Two's-complement minimal INTEGER from an unsigned value.
inline Bytes integer_bytes(uint64_t v) {
    Bytes digits;
    do {
        digits.push_back(static_cast<uint8_t>(v & 0xff));
        v >>= 8;
    } while (v);
    if (digits.back() & 0x80) digits.push_back(0x00);
    return Bytes(digits.rbegin(), digits.rend());
}

inline TlvNode integer(uint64_t v) {
    return make_primitive(TagClass::universal, tag::integer, integer_bytes(v));
}

inline TlvNode integer_raw(Bytes content) {
    return make_primitive(TagClass::universal, tag::integer, std::move(content));
}

inline TlvNode octet(Bytes content) {
    return make_primitive(TagClass::universal, tag::octet_string, std::move(content));
}

/// OCTET STRING whose content is the given DER elements (kept as children so
/// inner fields stay addressable).
inline TlvNode octet_wrapping(std::vector<TlvNode> inner) {
    TlvNode n = make_primitive(TagClass::universal, tag::octet_string, {});
    n.children = std::move(inner);
    n.encapsulated = true;
    return n;
}

inline TlvNode bit_string(Bytes bits, uint8_t unused = 0) {
    Bytes content{unused};
    append(content, bits);
    return make_primitive(TagClass::universal, tag::bit_string, std::move(content));
}

inline TlvNode bit_string_wrapping(std::vector<TlvNode> inner) {
    TlvNode n = make_primitive(TagClass::universal, tag::bit_string, {});
    n.children = std::move(inner);
    n.encapsulated = true;
    n.value_prefix = {0};
    return n;
}

inline Bytes oid_encode(const std::string& dotted) {
    std::vector<uint64_t> arcs;
    size_t pos = 0;
    while (pos < dotted.size()) {
        size_t dot = dotted.find('.', pos);
        if (dot == std::string::npos) dot = dotted.size();
        arcs.push_back(std::stoull(dotted.substr(pos, dot - pos)));
        pos = dot + 1;
    }
    if (arcs.size() < 2) throw std::invalid_argument("OID needs at least two arcs");
    Bytes out;
    auto push_arc = [&out](uint64_t v) {
        Bytes digits;
        do {
            digits.push_back(static_cast<uint8_t>(v & 0x7f));
            v >>= 7;
        } while (v);
        for (size_t i = digits.size(); i-- > 0;)
            out.push_back(static_cast<uint8_t>(digits[i] | (i ? 0x80 : 0x00)));
    };
    push_arc(arcs[0] * 40 + arcs[1]);
    for (size_t i = 2; i < arcs.size(); ++i) push_arc(arcs[i]);
    return out;
}

inline TlvNode oid(const std::string& dotted) {
    return make_primitive(TagClass::universal, tag::oid, oid_encode(dotted));
}

inline TlvNode printable(const std::string& s) {
    return make_primitive(TagClass::universal, tag::printable_string, to_bytes(s));
}

inline TlvNode ia5(const std::string& s) {
    return make_primitive(TagClass::universal, tag::ia5_string, to_bytes(s));
}

inline TlvNode utf8(const std::string& s) {
    return make_primitive(TagClass::universal, tag::utf8_string, to_bytes(s));
}

/// "YYMMDDHHMMSSZ"
inline TlvNode utc_time(const std::string& s) {
    return make_primitive(TagClass::universal, tag::utc_time, to_bytes(s));
}

/// "YYYYMMDDHHMMSSZ"
inline TlvNode generalized_time(const std::string& s) {
    return make_primitive(TagClass::universal, tag::generalized_time, to_bytes(s));
}

inline TlvNode ctx(uint64_t number, std::vector<TlvNode> children) {
    return make_constructed(TagClass::context, number, std::move(children));
}

inline TlvNode ctx_prim(uint64_t number, Bytes value) {
    return make_primitive(TagClass::context, number, std::move(value));
}

inline TlvNode labeled(TlvNode n, std::string label) {
    n.label = std::move(label);
    return n;
}

inline uint64_t read_uint(const TlvNode& n) {
    uint64_t v = 0;
    for (uint8_t b : n.value) v = v << 8 | b;
    return v;
}

inline std::string oid_to_string(ByteView content) {
    std::string out;
    uint64_t acc = 0;
    bool first_pair = true;
    for (size_t i = 0; i < content.size(); ++i) {
        acc = acc << 7 | (content[i] & 0x7f);
        if ((content[i] & 0x80) == 0) {
            if (first_pair) {
                uint64_t a = acc / 40 <= 2 ? acc / 40 : 2;
                out = std::to_string(a) + "." + std::to_string(acc - a * 40);
                first_pair = false;
            } else {
                out += "." + std::to_string(acc);
            }
            acc = 0;
        }
    }
    return out;
}

}  // namespace derfuzz::asn1
