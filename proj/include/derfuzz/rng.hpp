#pragma once

#include <cstdint>
#include <string_view>

#include "derfuzz/bytes.hpp"

namespace derfuzz {

/// Deterministic xoshiro256** generator. The standard <random> engines are
/// deterministic too, but the distributions are not pinned across library
/// implementations; batch replay needs stable draws, so bounded sampling is
/// implemented here directly.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        // splitmix64 expansion of the seed into the four lanes
        uint64_t x = seed;
        for (auto& lane : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            lane = z ^ (z >> 31);
        }
    }

    uint64_t next() {
        auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        uint64_t result = rotl(state_[1] * 5, 7) * 9;
        uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform value in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        // rejection sampling keeps the draw unbiased
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t v = next();
            if (v >= threshold) return v % n;
        }
    }

    /// Uniform value in [lo, hi] inclusive.
    uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

    uint8_t byte() { return static_cast<uint8_t>(next() & 0xff); }

    bool chance(double p) {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0) < p;
    }

    Bytes bytes(size_t n) {
        Bytes out(n);
        for (auto& b : out) b = byte();
        return out;
    }

    /// Independent child stream; used to fan batch work out to workers while
    /// keeping results order-independent of scheduling.
    Rng derive(uint64_t salt) const {
        uint64_t mix = state_[0] ^ (state_[3] * 0x9e3779b97f4a7c15ULL) ^ salt;
        return Rng(mix * 0xd1342543de82ef95ULL + salt);
    }

    static Rng from_label(uint64_t seed, std::string_view label, uint64_t salt = 0) {
        uint64_t h = 1469598103934665603ULL ^ seed;
        for (char c : label) h = (h ^ static_cast<uint8_t>(c)) * 1099511628211ULL;
        return Rng(h ^ salt * 0x2545f4914f6cdd1dULL);
    }

private:
    uint64_t state_[4];
};

}  // namespace derfuzz
