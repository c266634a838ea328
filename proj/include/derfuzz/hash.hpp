#pragma once

#include <openssl/evp.h>

#include <stdexcept>

#include "derfuzz/bytes.hpp"

namespace derfuzz {

inline Bytes digest(const EVP_MD* md, ByteView data) {
    Bytes out(static_cast<size_t>(EVP_MD_size(md)));
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1)
        throw std::runtime_error("digest failed");
    out.resize(len);
    return out;
}

inline Bytes sha256(ByteView data) { return digest(EVP_sha256(), data); }

/// Key identifiers use the 160-bit digest of the subject public key bits.
inline Bytes sha1(ByteView data) { return digest(EVP_sha1(), data); }

inline std::string sha256_hex(ByteView data) { return hex_encode(sha256(data)); }

}  // namespace derfuzz
