#pragma once

#include <vector>

#include "derfuzz/crypto/rsa.hpp"

namespace derfuzz::crypto {

/// Keys involved in signing one object: the issuing CA pair and the one-off
/// pair whose public half is embedded in the object's EE certificate.
struct KeyMaterial {
    const RsaKeyPair* ca = nullptr;
    const RsaKeyPair* one_off = nullptr;

    Bytes ca_key_id() const { return key_identifier(ca->pub); }
    Bytes one_off_key_id() const { return key_identifier(one_off->pub); }
};

/// Pre-generated one-off keys, handed out round-robin. Key generation is by
/// far the most expensive step of object creation, so paying it once per
/// campaign keeps the per-object cost at two signatures.
class KeyPool {
public:
    KeyPool() = default;

    KeyPool(Rng rng, size_t count) {
        keys_.reserve(count);
        for (size_t i = 0; i < count; ++i) keys_.push_back(generate_keypair(rng));
    }

    const RsaKeyPair& pick(size_t index) const { return keys_[index % keys_.size()]; }
    size_t size() const { return keys_.size(); }
    const std::vector<RsaKeyPair>& all() const { return keys_; }
    std::vector<RsaKeyPair>& all() { return keys_; }

private:
    std::vector<RsaKeyPair> keys_;
};

}  // namespace derfuzz::crypto
