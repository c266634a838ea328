#pragma once

#include <cstdint>
#include <vector>

#include "derfuzz/bytes.hpp"

namespace derfuzz::cov {

struct CounterSnapshot {
    uint64_t t_ns = 0;
    Bytes raw;
};

/// Wrap-corrected 64-bit view of the target's 8-bit counters. A raw value
/// smaller than the previous one means the byte wrapped; as long as fewer
/// than 256 increments land between two snapshots the logical count is
/// exact.
struct WideCounters {
    std::vector<uint8_t> last;
    std::vector<uint32_t> wraps;
    std::vector<uint64_t> logical;

    void reset(size_t size) {
        last.assign(size, 0);
        wraps.assign(size, 0);
        logical.assign(size, 0);
    }

    size_t size() const { return last.size(); }

    void update_index(size_t i, uint8_t cur) {
        if (cur < last[i]) ++wraps[i];
        last[i] = cur;
        logical[i] = static_cast<uint64_t>(cur) + 256ull * wraps[i];
    }
};

/// Fold one snapshot pair into the wide state.
inline WideCounters& accumulate_wraps(const CounterSnapshot& prev, const CounterSnapshot& cur,
                                      WideCounters& state) {
    if (state.size() != cur.raw.size()) {
        state.reset(cur.raw.size());
        for (size_t i = 0; i < prev.raw.size() && i < state.size(); ++i)
            state.update_index(i, prev.raw[i]);
    }
    for (size_t i = 0; i < cur.raw.size(); ++i)
        if (cur.raw[i] != state.last[i]) state.update_index(i, cur.raw[i]);
    return state;
}

}  // namespace derfuzz::cov
