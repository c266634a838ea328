#pragma once

// Independent strict DER structural checker used as a test oracle. It shares
// no code with the library parser: a plain recursive descent that demands
// definite minimal-form lengths and exact content consumption.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace strict_der {

struct Header {
    uint8_t tag_class;
    bool constructed;
    uint64_t tag_number;
    uint64_t declared_length;
    size_t tag_size;
    size_t header_size;
};

/// Decode one TLV header at `data`. Returns nothing on malformed or
/// indefinite headers. Does not require the minimal length form, so tests
/// can read declared lengths out of deliberately broken encodings.
inline std::optional<Header> read_header(std::span<const uint8_t> data) {
    if (data.empty()) return std::nullopt;
    Header h{};
    size_t pos = 0;
    uint8_t first = data[pos++];
    h.tag_class = first >> 6;
    h.constructed = (first & 0x20) != 0;
    h.tag_number = first & 0x1f;
    if (h.tag_number == 0x1f) {
        h.tag_number = 0;
        for (;;) {
            if (pos >= data.size()) return std::nullopt;
            uint8_t b = data[pos++];
            h.tag_number = h.tag_number << 7 | (b & 0x7f);
            if ((b & 0x80) == 0) break;
        }
    }
    h.tag_size = pos;
    if (pos >= data.size()) return std::nullopt;
    uint8_t lb = data[pos++];
    if (lb < 0x80) {
        h.declared_length = lb;
    } else if (lb == 0x80) {
        return std::nullopt;  // indefinite
    } else {
        int n = lb & 0x7f;
        if (n > 8 || pos + static_cast<size_t>(n) > data.size()) return std::nullopt;
        uint64_t len = 0;
        for (int i = 0; i < n; ++i) len = len << 8 | data[pos++];
        h.declared_length = len;
    }
    h.header_size = pos;
    return h;
}

inline bool check_element(std::span<const uint8_t> data, size_t& consumed, int depth) {
    if (depth > 96) return false;
    auto h = read_header(data);
    if (!h) return false;
    {
        // enforce minimal length form
        uint8_t first_len = data[h->tag_size];
        if (first_len >= 0x80) {
            int n = first_len & 0x7f;
            if (h->declared_length < 0x80) return false;  // long form for short value
            uint64_t v = h->declared_length;
            int digits = 0;
            while (v) {
                ++digits;
                v >>= 8;
            }
            if (n != digits) return false;  // leading zero length bytes
        }
    }
    if (h->header_size + h->declared_length > data.size()) return false;
    consumed = h->header_size + static_cast<size_t>(h->declared_length);
    if (h->constructed) {
        std::span<const uint8_t> content =
            data.subspan(h->header_size, static_cast<size_t>(h->declared_length));
        size_t pos = 0;
        while (pos < content.size()) {
            size_t child = 0;
            if (!check_element(content.subspan(pos), child, depth + 1)) return false;
            pos += child;
        }
        if (pos != content.size()) return false;
    }
    return true;
}

/// True iff `data` is exactly one well-formed definite-length DER element.
inline bool accepts(std::span<const uint8_t> data) {
    size_t consumed = 0;
    if (!check_element(data, consumed, 0)) return false;
    return consumed == data.size();
}

}  // namespace strict_der
