#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "derfuzz/cov/counters.hpp"

namespace derfuzz::cov {

/// Map a vector of identification-counter values (execution-phase order) to
/// the in-batch object position. The loop currently running sits strictly
/// between 0 and the batch size: finished loops read batch-size, later loops
/// read 0. The max over interior values points at the latest object already
/// started. With no interior value, all-zero means nothing was processed yet
/// (object 1) and otherwise every loop finished (object batch-size).
inline uint32_t select_position(const std::vector<uint64_t>& if_values, size_t batch_size) {
    uint64_t best = 0;
    bool interior = false;
    bool all_zero = true;
    for (uint64_t v : if_values) {
        if (v != 0) all_zero = false;
        if (v != 0 && v < batch_size) {
            interior = true;
            best = std::max(best, v);
        }
    }
    if (interior) return static_cast<uint32_t>(best);
    return all_zero ? 1 : static_cast<uint32_t>(batch_size);
}

struct AttributionRecord {
    uint32_t counter_index = 0;
    uint64_t t_ns = 0;
    std::vector<uint64_t> if_values;
    uint32_t object_index = 0;  // 1-based position in the batch

    std::string to_line() const {
        std::ostringstream out;
        out << t_ns << " " << counter_index << " [";
        for (size_t i = 0; i < if_values.size(); ++i) out << (i ? "," : "") << if_values[i];
        out << "] " << object_index;
        return out.str();
    }
};

/// Per-object scores from attribution records: the number of new branches an
/// object uncovered, capped at 10. Zero-score objects are flagged for
/// discard.
template <typename BatchT>
Bytes score_objects(const std::vector<AttributionRecord>& records, BatchT& batch) {
    std::map<uint32_t, int> per_object;
    for (const auto& r : records) ++per_object[r.object_index];
    Bytes scores(batch.entries.size(), 0);
    for (size_t i = 0; i < batch.entries.size(); ++i) {
        auto it = per_object.find(static_cast<uint32_t>(i + 1));
        int score = it == per_object.end() ? 0 : std::min(it->second, 10);
        batch.entries[i].score = score;
        batch.entries[i].discard = score == 0;
        scores[i] = static_cast<uint8_t>(score);
    }
    return scores;
}

}  // namespace derfuzz::cov
