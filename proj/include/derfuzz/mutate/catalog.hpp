#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "derfuzz/asn1/encode.hpp"
#include "derfuzz/asn1/tlv.hpp"
#include "derfuzz/asn1/tlv_json.hpp"
#include "derfuzz/asn1/values.hpp"
#include "derfuzz/bytes.hpp"
#include "derfuzz/rng.hpp"

namespace derfuzz::mut {

using asn1::TagClass;
using asn1::TlvNode;

enum class Category { structure, type, byte, splice };

inline std::string category_name(Category c) {
    switch (c) {
        case Category::structure: return "structure";
        case Category::type: return "type";
        case Category::byte: return "byte";
        case Category::splice: return "splice";
    }
    return "?";
}

inline Category category_from_name(const std::string& s) {
    if (s == "structure") return Category::structure;
    if (s == "type") return Category::type;
    if (s == "byte") return Category::byte;
    if (s == "splice") return Category::splice;
    throw std::runtime_error("unknown mutation category " + s);
}

/// One mutation operator. `plan` draws all randomness and freezes it into a
/// parameter blob; `apply` is a pure function of (node, parameters) so a
/// recorded mutation replays byte-identically.
struct Operator {
    std::string id;
    Category category;
    std::function<bool(const TlvNode&)> applies;
    std::function<Bytes(const TlvNode&, Rng&)> plan;
    std::function<void(TlvNode&, const Bytes&)> apply;
};

namespace detail {

inline bool is_universal(const TlvNode& n, uint64_t number) {
    return !n.opaque && n.tag_class == TagClass::universal && n.tag_number == number &&
           !n.constructed;
}

inline bool is_primitive(const TlvNode& n) { return !n.constructed && !n.opaque; }

inline bool is_string_kind(const TlvNode& n) {
    return is_universal(n, asn1::tag::utf8_string) ||
           is_universal(n, asn1::tag::printable_string) ||
           is_universal(n, asn1::tag::ia5_string);
}

inline bool is_time_kind(const TlvNode& n) {
    return is_universal(n, asn1::tag::utc_time) ||
           is_universal(n, asn1::tag::generalized_time);
}

inline bool is_container(const TlvNode& n) {
    return (n.constructed || n.encapsulated) && !n.children.empty();
}

/// Raw content of a primitive node, materializing an expanded one.
inline Bytes effective_value(const TlvNode& n) {
    return n.has_children() ? asn1::encode_content(n) : n.value;
}

inline void mark_content_mutated(TlvNode& n) {
    n.tainted = true;
    n.protected_ = true;
}

inline void mark_structure_mutated(TlvNode& n) {
    n.tainted = true;
    n.protected_ = true;
    n.breaking = true;
}

inline const Bytes& interesting_bytes() {
    static const Bytes table = {0x00, 0xff, 0x7f, 0x80, 0x01, 0x1f, 0x20,
                                0x30, 0x31, 0x0a, 0x0d, 0x41, 0xfe};
    return table;
}

inline uint32_t get_u32(const Bytes& b, size_t off) {
    uint32_t v = 0;
    for (size_t i = 0; i < 4 && off + i < b.size(); ++i) v = v << 8 | b[off + i];
    return v;
}

inline void put_u32(Bytes& b, uint32_t v) {
    b.push_back(static_cast<uint8_t>(v >> 24));
    b.push_back(static_cast<uint8_t>(v >> 16));
    b.push_back(static_cast<uint8_t>(v >> 8));
    b.push_back(static_cast<uint8_t>(v));
}

}  // namespace detail

/// Published operator catalog. The floor of 59 operators is asserted when the
/// catalog is first built.
class MutationCatalog {
public:
    MutationCatalog();

    const std::vector<Operator>& operators() const { return ops_; }

    const Operator& by_id(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::runtime_error("unknown operator " + id);
        return ops_[it->second];
    }

    std::vector<const Operator*> applicable(const TlvNode& n, Category c) const {
        std::vector<const Operator*> out;
        for (const auto& op : ops_)
            if (op.category == c && op.applies(n)) out.push_back(&op);
        return out;
    }

    size_t size() const { return ops_.size(); }

private:
    void add(Operator op) {
        index_[op.id] = ops_.size();
        ops_.push_back(std::move(op));
    }

    std::vector<Operator> ops_;
    std::map<std::string, size_t> index_;
};

inline MutationCatalog::MutationCatalog() {
    using namespace detail;
    auto any = [](const TlvNode& n) { return !n.opaque; };
    auto primitive = [](const TlvNode& n) { return is_primitive(n) || n.encapsulated; };

    // ---- structure: tag and length field manipulation ----------------------
    add({"tag_interesting", Category::structure, any,
         [](const TlvNode& n, Rng& rng) {
             uint8_t lead = static_cast<uint8_t>(static_cast<uint8_t>(n.tag_class) << 6 |
                                                 (n.constructed ? 0x20 : 0x00));
             Bytes params;
             switch (rng.below(3)) {
                 case 0:  // "more bytes follow" form of the same tag number
                     params = {static_cast<uint8_t>(lead | 0x1f),
                               static_cast<uint8_t>(n.tag_number & 0x7f)};
                     break;
                 case 1:  // bare more-bytes-follow lead with nothing following
                     params = {static_cast<uint8_t>(lead | 0x1f)};
                     break;
                 default:
                     params = {interesting_bytes()[rng.below(interesting_bytes().size())]};
             }
             return params;
         },
         [](TlvNode& n, const Bytes& p) {
             n.tag_override = p;
             mark_structure_mutated(n);
         }});
    add({"tag_multibyte_padded", Category::structure, any,
         [](const TlvNode& n, Rng& rng) {
             uint8_t lead = static_cast<uint8_t>(static_cast<uint8_t>(n.tag_class) << 6 |
                                                 (n.constructed ? 0x20 : 0x00) | 0x1f);
             Bytes params{lead};
             size_t pad = rng.range(1, 3);
             for (size_t i = 0; i < pad; ++i) params.push_back(0x80);
             params.push_back(static_cast<uint8_t>(n.tag_number & 0x7f));
             return params;
         },
         [](TlvNode& n, const Bytes& p) {
             n.tag_override = p;
             mark_structure_mutated(n);
         }});
    add({"tag_class_flip", Category::structure, any,
         [](const TlvNode& n, Rng& rng) {
             uint8_t cls = static_cast<uint8_t>((static_cast<uint8_t>(n.tag_class) +
                                                 rng.range(1, 3)) & 0x03);
             uint8_t lead = static_cast<uint8_t>(cls << 6 | (n.constructed ? 0x20 : 0x00) |
                                                 (n.tag_number & 0x1f));
             return Bytes{lead};
         },
         [](TlvNode& n, const Bytes& p) {
             n.tag_override = p;
             mark_structure_mutated(n);
         }});
    add({"len_zero", Category::structure, any,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             n.length_override = 0;
             mark_structure_mutated(n);
         }});
    add({"len_overlong", Category::structure, any,
         [](const TlvNode& n, Rng& rng) {
             static const uint32_t deltas[] = {1, 2, 16, 255, 4096};
             uint32_t base = static_cast<uint32_t>(effective_value(n).size());
             Bytes p;
             if (rng.chance(0.3))
                 put_u32(p, 65536);  // long-form claim far past the content
             else
                 put_u32(p, base + deltas[rng.below(5)]);
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             n.length_override = get_u32(p, 0);
             mark_structure_mutated(n);
         }});
    add({"len_underlong", Category::structure, any,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len > 1 ? static_cast<uint32_t>(rng.below(len)) : 0);
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             n.length_override = get_u32(p, 0);
             mark_structure_mutated(n);
         }});
    add({"len_indefinite", Category::structure, any,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             n.length_form_override = Bytes{0x80};
             mark_structure_mutated(n);
         }});
    add({"len_long_nonminimal", Category::structure, any,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             // valid value, forbidden form: long form with leading zeros
             size_t len = asn1::encode_content(n).size();
             n.length_form_override = Bytes{0x84, 0x00,
                                            static_cast<uint8_t>((len >> 16) & 0xff),
                                            static_cast<uint8_t>((len >> 8) & 0xff),
                                            static_cast<uint8_t>(len & 0xff)};
             mark_structure_mutated(n);
         }});

    // ---- type: INTEGER ------------------------------------------------------
    auto int_only = [](const TlvNode& n) { return is_universal(n, asn1::tag::integer); };
    auto set_int = [](TlvNode& n, Bytes v) {
        n.set_value(std::move(v));
        detail::mark_content_mutated(n);
    };
    add({"int_zero", Category::type, int_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_int](TlvNode& n, const Bytes&) { set_int(n, {0x00}); }});
    add({"int_negative_one", Category::type, int_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_int](TlvNode& n, const Bytes&) { set_int(n, {0xff}); }});
    add({"int_increment", Category::type, int_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_int](TlvNode& n, const Bytes&) {
             Bytes v = n.value.empty() ? Bytes{0} : n.value;
             for (size_t i = v.size(); i-- > 0;)
                 if (++v[i] != 0) break;
             set_int(n, std::move(v));
         }});
    add({"int_decrement", Category::type, int_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_int](TlvNode& n, const Bytes&) {
             Bytes v = n.value.empty() ? Bytes{0} : n.value;
             for (size_t i = v.size(); i-- > 0;)
                 if (v[i]-- != 0) break;
             set_int(n, std::move(v));
         }});
    add({"int_interesting", Category::type, int_only,
         [](const TlvNode&, Rng& rng) {
             static const std::vector<Bytes> table = {
                 {0x01}, {0x7f}, {0x00, 0x80}, {0x00, 0xff}, {0x01, 0x00},
                 {0x7f, 0xff}, {0x00, 0xff, 0xff}, {0x7f, 0xff, 0xff, 0xff},
                 {0x00, 0x80, 0x00, 0x00, 0x00}, {0x00, 0xff, 0xff, 0xff, 0xff},
                 {0x7f, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff},
                 {0x80, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}};
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(table.size())));
             return p;
         },
         [set_int](TlvNode& n, const Bytes& p) {
             static const std::vector<Bytes> table = {
                 {0x01}, {0x7f}, {0x00, 0x80}, {0x00, 0xff}, {0x01, 0x00},
                 {0x7f, 0xff}, {0x00, 0xff, 0xff}, {0x7f, 0xff, 0xff, 0xff},
                 {0x00, 0x80, 0x00, 0x00, 0x00}, {0x00, 0xff, 0xff, 0xff, 0xff},
                 {0x7f, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff},
                 {0x80, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}};
             set_int(n, table[get_u32(p, 0) % table.size()]);
         }});
    add({"int_pad_width", Category::type, int_only,
         [](const TlvNode&, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.range(1, 16)));
             return p;
         },
         [set_int](TlvNode& n, const Bytes& p) {
             // non-minimal zero padding: structurally fine, DER-invalid content
             Bytes v(get_u32(p, 0), 0x00);
             append(v, n.value);
             set_int(n, std::move(v));
         }});
    add({"int_negate", Category::type, int_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_int](TlvNode& n, const Bytes&) {
             Bytes v = n.value.empty() ? Bytes{0} : n.value;
             for (auto& b : v) b = static_cast<uint8_t>(~b);
             for (size_t i = v.size(); i-- > 0;)
                 if (++v[i] != 0) break;
             set_int(n, std::move(v));
         }});

    // ---- type: OBJECT IDENTIFIER -------------------------------------------
    auto oid_only = [](const TlvNode& n) { return is_universal(n, asn1::tag::oid); };
    add({"oid_arc_overflow", Category::type, oid_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v = n.value;
             // append an arc of 2^35
             Bytes arc = {0x88, 0x80, 0x80, 0x80, 0x00};
             append(v, arc);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"oid_truncate", Category::type, oid_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, n.value.empty() ? 0 : static_cast<uint32_t>(rng.below(n.value.size())));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             v.resize(std::min<size_t>(v.size(), get_u32(p, 0)));
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"oid_dangling_arc", Category::type, oid_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v = n.value;
             v.push_back(0x80);  // continuation bit set, arc never terminates
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"oid_extend_random", Category::type, oid_only,
         [](const TlvNode&, Rng& rng) {
             Bytes p;
             size_t arcs = rng.range(1, 6);
             for (size_t i = 0; i < arcs; ++i) p.push_back(static_cast<uint8_t>(rng.below(0x7f)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             append(v, p);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});

    // ---- type: UTCTime / GeneralizedTime ------------------------------------
    auto time_only = [](const TlvNode& n) { return is_time_kind(n); };
    auto set_time = [](TlvNode& n, std::string s) {
        n.set_value(to_bytes(s));
        detail::mark_content_mutated(n);
    };
    add({"time_invalid_calendar", Category::type, time_only,
         [](const TlvNode&, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(3)));
             return p;
         },
         [set_time](TlvNode& n, const Bytes& p) {
             static const char* utc[] = {"990230000000Z", "251301000000Z", "250932000000Z"};
             static const char* gen[] = {"20250230000000Z", "20251301000000Z",
                                         "20250932000000Z"};
             bool is_gen = n.tag_number == asn1::tag::generalized_time;
             set_time(n, (is_gen ? gen : utc)[get_u32(p, 0) % 3]);
         }});
    add({"time_overflow", Category::type, time_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_time](TlvNode& n, const Bytes&) {
             set_time(n, n.tag_number == asn1::tag::generalized_time ? "99991231235959Z"
                                                                     : "491231235959Z");
         }});
    add({"time_underflow", Category::type, time_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [set_time](TlvNode& n, const Bytes&) {
             set_time(n, n.tag_number == asn1::tag::generalized_time ? "00000101000000Z"
                                                                     : "500101000000Z");
         }});
    add({"time_nonzulu", Category::type, time_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v = n.value;
             if (!v.empty() && v.back() == 'Z') v.pop_back();
             append(v, to_bytes("+0130"));
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"time_garbage_digit", Category::type, time_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, n.value.empty() ? 0 : static_cast<uint32_t>(rng.below(n.value.size())));
             p.push_back(static_cast<uint8_t>('a' + rng.below(26)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             if (!v.empty()) v[get_u32(p, 0) % v.size()] = p[4];
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"time_empty", Category::type, time_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             n.set_value({});
             mark_content_mutated(n);
         }});

    // ---- type: strings -------------------------------------------------------
    auto str_only = [](const TlvNode& n) { return is_string_kind(n); };
    add({"str_case_flip", Category::type, str_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             size_t flips = rng.range(1, 4);
             for (size_t i = 0; i < flips; ++i)
                 put_u32(p, n.value.empty() ? 0
                                            : static_cast<uint32_t>(rng.below(n.value.size())));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             for (size_t off = 0; off + 4 <= p.size(); off += 4) {
                 if (v.empty()) break;
                 uint8_t& c = v[get_u32(p, off) % v.size()];
                 if (c >= 'a' && c <= 'z') c = static_cast<uint8_t>(c - 'a' + 'A');
                 else if (c >= 'A' && c <= 'Z') c = static_cast<uint8_t>(c - 'A' + 'a');
             }
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_null_insert", Category::type, str_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.value.size() + 1)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             v.insert(v.begin() + get_u32(p, 0) % (v.size() + 1), 0x00);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_overlong_utf8", Category::type, str_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.value.size() + 1)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             Bytes overlong = {0xc0, 0x80};  // two-byte encoding of NUL
             v.insert(v.begin() + get_u32(p, 0) % (v.size() + 1), overlong.begin(),
                      overlong.end());
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_format_chars", Category::type, str_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.value.size() + 1)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             Bytes fmt = to_bytes("%n%s%x");
             v.insert(v.begin() + get_u32(p, 0) % (v.size() + 1), fmt.begin(), fmt.end());
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_invalid_continuation", Category::type, str_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.value.size() + 1)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             v.insert(v.begin() + get_u32(p, 0) % (v.size() + 1), 0x80);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_high_codepoint", Category::type, str_only,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.value.size() + 1)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = n.value;
             Bytes cp = {0xf4, 0x8f, 0xbf, 0xbf};  // U+10FFFF
             v.insert(v.begin() + get_u32(p, 0) % (v.size() + 1), cp.begin(), cp.end());
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_repeat", Category::type, str_only,
         [](const TlvNode&, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.range(2, 8)));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v;
             uint32_t times = get_u32(p, 0);
             for (uint32_t i = 0; i < times && v.size() < 4096; ++i) append(v, n.value);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"str_empty", Category::type, str_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             n.set_value({});
             mark_content_mutated(n);
         }});

    // ---- type: BOOLEAN -------------------------------------------------------
    auto bool_only = [](const TlvNode& n) { return is_universal(n, asn1::tag::boolean); };
    add({"bool_non_der", Category::type, bool_only,
         [](const TlvNode&, Rng& rng) {
             return Bytes{static_cast<uint8_t>(rng.range(0x01, 0xfe))};
         },
         [](TlvNode& n, const Bytes& p) {
             n.set_value({p.empty() ? uint8_t(0x01) : p[0]});
             mark_content_mutated(n);
         }});
    add({"bool_wide", Category::type, bool_only,
         [](const TlvNode&, Rng& rng) { return rng.bytes(rng.range(2, 8)); },
         [](TlvNode& n, const Bytes& p) {
             n.set_value(p);
             mark_content_mutated(n);
         }});

    // ---- type: BIT STRING ----------------------------------------------------
    auto bits_only = [](const TlvNode& n) {
        return !n.opaque && n.tag_class == TagClass::universal &&
               n.tag_number == asn1::tag::bit_string && !n.constructed;
    };
    add({"bits_unused_abuse", Category::type, bits_only,
         [](const TlvNode&, Rng& rng) {
             return Bytes{static_cast<uint8_t>(rng.range(8, 0x7f))};
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.empty()) v.push_back(0);
             v[0] = p.empty() ? 8 : p[0];  // unused-bit count beyond 7 is invalid
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"bits_nonzero_padding", Category::type, bits_only,
         [](const TlvNode&, Rng& rng) {
             return Bytes{static_cast<uint8_t>(rng.range(1, 7))};
         },
         [](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.size() < 2) v = {0, 0xff};
             v[0] = p.empty() ? 3 : p[0];
             v.back() |= 0x01;  // padding bits must be zero in DER
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"bits_strip_unused_octet", Category::type, bits_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v = effective_value(n);
             if (!v.empty()) v.erase(v.begin());
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});

    // ---- type: OCTET STRING ---------------------------------------------------
    auto oct_only = [](const TlvNode& n) {
        return !n.opaque && n.tag_class == TagClass::universal &&
               n.tag_number == asn1::tag::octet_string && !n.constructed;
    };
    add({"oct_truncate_half", Category::type, oct_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v = effective_value(n);
             v.resize(v.size() / 2);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});
    add({"oct_double", Category::type, oct_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v = effective_value(n);
             Bytes doubled = v;
             append(doubled, v);
             n.set_value(std::move(doubled));
             mark_content_mutated(n);
         }});
    add({"oct_zero_same_length", Category::type, oct_only,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [](TlvNode& n, const Bytes&) {
             Bytes v(effective_value(n).size(), 0x00);
             n.set_value(std::move(v));
             mark_content_mutated(n);
         }});

    // ---- type: NULL ------------------------------------------------------------
    add({"null_payload", Category::type,
         [](const TlvNode& n) { return is_universal(n, asn1::tag::null); },
         [](const TlvNode&, Rng& rng) { return rng.bytes(rng.range(1, 4)); },
         [](TlvNode& n, const Bytes& p) {
             n.set_value(p);
             mark_content_mutated(n);
         }});

    // ---- type: SEQUENCE / SET child-list edits ----------------------------------
    auto container = [](const TlvNode& n) { return is_container(n); };
    add({"seq_drop_child", Category::type, container,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.children.size())));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             if (n.children.empty()) return;
             n.children.erase(n.children.begin() + get_u32(p, 0) % n.children.size());
             mark_content_mutated(n);
         }});
    add({"seq_dup_child", Category::type, container,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.children.size())));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             if (n.children.empty()) return;
             size_t i = get_u32(p, 0) % n.children.size();
             TlvNode copy = n.children[i];
             copy.label.clear();  // keep labels unique within the tree
             asn1::walk(copy, [](TlvNode& c, const asn1::NodePath&) {
                 c.label.clear();
                 return true;
             });
             n.children.insert(n.children.begin() + i, std::move(copy));
             mark_content_mutated(n);
         }});
    add({"seq_swap_children", Category::type, container,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(n.children.size())));
             put_u32(p, static_cast<uint32_t>(rng.below(n.children.size())));
             return p;
         },
         [](TlvNode& n, const Bytes& p) {
             if (n.children.size() < 2) return;
             size_t a = get_u32(p, 0) % n.children.size();
             size_t b = get_u32(p, 4) % n.children.size();
             std::swap(n.children[a], n.children[b]);
             mark_content_mutated(n);
         }});

    // ---- byte level ---------------------------------------------------------------
    auto byte_ok = [primitive](const TlvNode& n) { return primitive(n) || n.opaque; };
    auto setv = [](TlvNode& n, Bytes v) {
        bool was_opaque = n.opaque;
        n.set_value(std::move(v));
        n.opaque = was_opaque;
        detail::mark_content_mutated(n);
    };
    add({"bit_flip", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t bits = effective_value(n).size() * 8;
             Bytes p;
             put_u32(p, bits ? static_cast<uint32_t>(rng.below(bits)) : 0);
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.empty()) v.push_back(0);
             uint32_t bit = get_u32(p, 0) % (v.size() * 8);
             v[bit / 8] ^= static_cast<uint8_t>(0x80 >> (bit % 8));
             setv(n, std::move(v));
         }});
    add({"byte_insert_random", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(effective_value(n).size() + 1)));
             append(p, rng.bytes(rng.range(1, 8)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             size_t at = get_u32(p, 0) % (v.size() + 1);
             v.insert(v.begin() + at, p.begin() + 4, p.end());
             setv(n, std::move(v));
         }});
    add({"byte_delete_range", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             put_u32(p, static_cast<uint32_t>(rng.range(1, 8)));
             append(p, rng.bytes(1));  // degenerate-insert byte for empty values
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.empty()) {
                 // deleting from nothing degenerates to an insert
                 v.push_back(p.size() > 8 ? p[8] : 0x00);
             } else {
                 size_t at = get_u32(p, 0) % v.size();
                 size_t count = std::min<size_t>(get_u32(p, 4), v.size() - at);
                 v.erase(v.begin() + at, v.begin() + at + count);
             }
             setv(n, std::move(v));
         }});
    add({"byte_duplicate_range", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             put_u32(p, static_cast<uint32_t>(rng.range(1, 16)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (!v.empty()) {
                 size_t at = get_u32(p, 0) % v.size();
                 size_t count = std::min<size_t>(get_u32(p, 4), v.size() - at);
                 Bytes chunk(v.begin() + at, v.begin() + at + count);
                 v.insert(v.begin() + at, chunk.begin(), chunk.end());
             }
             setv(n, std::move(v));
         }});
    add({"byte_zero_fill", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             put_u32(p, static_cast<uint32_t>(rng.range(1, 16)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             size_t at = v.empty() ? 0 : get_u32(p, 0) % v.size();
             size_t count = std::min<size_t>(get_u32(p, 4), v.size() - at);
             std::fill(v.begin() + at, v.begin() + at + count, 0x00);
             setv(n, std::move(v));
         }});
    add({"byte_ff_fill", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             put_u32(p, static_cast<uint32_t>(rng.range(1, 16)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             size_t at = v.empty() ? 0 : get_u32(p, 0) % v.size();
             size_t count = std::min<size_t>(get_u32(p, 4), v.size() - at);
             std::fill(v.begin() + at, v.begin() + at + count, 0xff);
             setv(n, std::move(v));
         }});
    add({"byte_shuffle_range", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             put_u32(p, static_cast<uint32_t>(rng.range(2, 16)));
             put_u32(p, static_cast<uint32_t>(rng.next() & 0xffffffff));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.size() >= 2) {
                 size_t at = get_u32(p, 0) % v.size();
                 size_t count = std::min<size_t>(get_u32(p, 4), v.size() - at);
                 Rng mix(get_u32(p, 8));
                 for (size_t i = count; i > 1; --i)
                     std::swap(v[at + i - 1], v[at + mix.below(i)]);
             }
             setv(n, std::move(v));
         }});
    add({"byte_truncate_tail", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             v.resize(std::min<size_t>(v.size(), get_u32(p, 0)));
             setv(n, std::move(v));
         }});
    add({"byte_extend_random", Category::byte, byte_ok,
         [](const TlvNode&, Rng& rng) { return rng.bytes(rng.range(1, 32)); },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             append(v, p);
             setv(n, std::move(v));
         }});
    add({"byte_repeat_block", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             put_u32(p, static_cast<uint32_t>(rng.range(1, 8)));
             put_u32(p, static_cast<uint32_t>(rng.range(2, 16)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (!v.empty()) {
                 size_t at = get_u32(p, 0) % v.size();
                 size_t count = std::min<size_t>(get_u32(p, 4), v.size() - at);
                 size_t times = get_u32(p, 8);
                 Bytes chunk(v.begin() + at, v.begin() + at + count);
                 for (size_t i = 0; i < times && v.size() < 8192; ++i)
                     v.insert(v.begin() + at, chunk.begin(), chunk.end());
             }
             setv(n, std::move(v));
         }});
    add({"byte_swap_halves", Category::byte, byte_ok,
         [](const TlvNode&, Rng&) { return Bytes{}; },
         [setv](TlvNode& n, const Bytes&) {
             Bytes v = effective_value(n);
             size_t half = v.size() / 2;
             Bytes swapped(v.begin() + half, v.end());
             swapped.insert(swapped.end(), v.begin(), v.begin() + half);
             setv(n, std::move(swapped));
         }});
    add({"byte_interesting_insert", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             Bytes p;
             put_u32(p, static_cast<uint32_t>(rng.below(effective_value(n).size() + 1)));
             size_t count = rng.range(1, 4);
             for (size_t i = 0; i < count; ++i)
                 p.push_back(interesting_bytes()[rng.below(interesting_bytes().size())]);
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             size_t at = get_u32(p, 0) % (v.size() + 1);
             v.insert(v.begin() + at, p.begin() + 4, p.end());
             setv(n, std::move(v));
         }});
    add({"byte_interesting_overwrite", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             p.push_back(interesting_bytes()[rng.below(interesting_bytes().size())]);
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.empty()) v.push_back(0);
             v[get_u32(p, 0) % v.size()] = p[4];
             setv(n, std::move(v));
         }});
    add({"byte_overwrite_random", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             append(p, rng.bytes(rng.range(1, 8)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.empty()) v.push_back(0);
             size_t at = get_u32(p, 0) % v.size();
             for (size_t i = 4; i < p.size() && at + i - 4 < v.size(); ++i)
                 v[at + i - 4] = p[i];
             setv(n, std::move(v));
         }});
    add({"byte_xor_random", Category::byte, byte_ok,
         [](const TlvNode& n, Rng& rng) {
             size_t len = effective_value(n).size();
             Bytes p;
             put_u32(p, len ? static_cast<uint32_t>(rng.below(len)) : 0);
             p.push_back(static_cast<uint8_t>(rng.range(1, 255)));
             return p;
         },
         [setv](TlvNode& n, const Bytes& p) {
             Bytes v = effective_value(n);
             if (v.empty()) v.push_back(0);
             v[get_u32(p, 0) % v.size()] ^= p[4];
             setv(n, std::move(v));
         }});

    // ---- splice ---------------------------------------------------------------
    // The parameter blob is the full dump of the inserted subtree, so a
    // recorded splice replays without the donor tree being around anymore.
    add({"splice_subtree", Category::splice, any,
         [](const TlvNode&, Rng&) { return Bytes{}; },  // planned by the mutator
         [](TlvNode& n, const Bytes& p) {
             auto j = nlohmann::json::parse(to_string(p));
             n = asn1::tlv_from_json(j);
             mark_content_mutated(n);
         }});

    if (ops_.size() < 59)
        throw std::logic_error("mutation catalog below the published floor of 59 operators");
}

inline const MutationCatalog& catalog() {
    static const MutationCatalog instance;
    return instance;
}

}  // namespace derfuzz::mut
