#pragma once

#include <cstdint>
#include <string>

namespace derfuzz::asn1 {

enum class TagClass : uint8_t {
    universal = 0,
    application = 1,
    context = 2,
    priv = 3,
};

// Universal tag numbers that appear in DER-encoded PKI objects.
namespace tag {
inline constexpr uint64_t boolean = 1;
inline constexpr uint64_t integer = 2;
inline constexpr uint64_t bit_string = 3;
inline constexpr uint64_t octet_string = 4;
inline constexpr uint64_t null = 5;
inline constexpr uint64_t oid = 6;
inline constexpr uint64_t utf8_string = 12;
inline constexpr uint64_t sequence = 16;
inline constexpr uint64_t set = 17;
inline constexpr uint64_t printable_string = 19;
inline constexpr uint64_t ia5_string = 22;
inline constexpr uint64_t utc_time = 23;
inline constexpr uint64_t generalized_time = 24;
}  // namespace tag

inline std::string tag_name(TagClass cls, uint64_t number) {
    if (cls == TagClass::context) return "[" + std::to_string(number) + "]";
    if (cls == TagClass::application) return "APP" + std::to_string(number);
    if (cls == TagClass::priv) return "PRIV" + std::to_string(number);
    switch (number) {
        case tag::boolean: return "BOOLEAN";
        case tag::integer: return "INTEGER";
        case tag::bit_string: return "BIT STRING";
        case tag::octet_string: return "OCTET STRING";
        case tag::null: return "NULL";
        case tag::oid: return "OID";
        case tag::utf8_string: return "UTF8String";
        case tag::sequence: return "SEQUENCE";
        case tag::set: return "SET";
        case tag::printable_string: return "PrintableString";
        case tag::ia5_string: return "IA5String";
        case tag::utc_time: return "UTCTime";
        case tag::generalized_time: return "GeneralizedTime";
        default: return "UNIV" + std::to_string(number);
    }
}

}  // namespace derfuzz::asn1
