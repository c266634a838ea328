#pragma once

#include <atomic>
#include <chrono>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "derfuzz/cov/attribution.hpp"
#include "derfuzz/cov/counters.hpp"

namespace derfuzz::cov {

inline uint64_t monotonic_ns() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

struct SampleStats {
    uint64_t snapshots = 0;
    uint64_t duration_ns = 0;
    double mean_period_ns() const {
        return snapshots ? static_cast<double>(duration_ns) / static_cast<double>(snapshots)
                         : 0.0;
    }
};

struct SamplerOptions {
    /// Scan bound: highest counter index ever used by this target build plus
    /// one. Zero scans the whole map.
    size_t max_used_index = 0;
    /// Indices already scored in earlier runs; skipped during novelty
    /// detection (they still contribute to wrap tracking).
    std::set<uint32_t>* known = nullptr;
    /// Identification counters in execution-phase order.
    std::vector<uint32_t> if_indices;
    size_t batch_size = 0;
    bool track_first_activation = false;
};

/// Continuous snapshot loop over a live counter region. Copies the region,
/// folds wraps into 64-bit logical counts, and whenever an index outside
/// `known` first becomes nonzero, reads the identification counters and
/// attributes the new branch to an object position. Runs until `stop` is set,
/// then takes one final drain pass so counters bumped right before target
/// exit are not lost.
class Sampler {
public:
    SampleStats run(const uint8_t* region, size_t size, const std::atomic<bool>& stop,
                    const SamplerOptions& opt, std::vector<AttributionRecord>* records) {
        size_t limit = opt.max_used_index ? std::min(opt.max_used_index, size) : size;
        wide_.reset(size);
        seen_.assign(size, 0);
        if (opt.known)
            for (uint32_t idx : *opt.known)
                if (idx < size) seen_[idx] = 1;

        std::vector<uint8_t> cur(size, 0);
        std::vector<uint32_t> fresh;
        SampleStats stats;
        uint64_t start = monotonic_ns();
        bool draining = false;
        for (;;) {
            if (stop.load(std::memory_order_relaxed)) {
                if (draining) break;
                draining = true;  // one more pass after the target stopped
            }
            uint64_t t = monotonic_ns();
            std::memcpy(cur.data(), region, limit);
            fresh.clear();
            scan(cur.data(), limit, t, opt, fresh);
            if (!fresh.empty() && records) {
                std::vector<uint64_t> if_values;
                if_values.reserve(opt.if_indices.size());
                for (uint32_t idx : opt.if_indices)
                    if_values.push_back(idx < wide_.size() ? wide_.logical[idx] : 0);
                uint32_t object = select_position(if_values, opt.batch_size);
                for (uint32_t idx : fresh) {
                    records->push_back({idx, t, if_values, object});
                    if (opt.known) opt.known->insert(idx);
                }
            }
            ++stats.snapshots;
        }
        stats.duration_ns = monotonic_ns() - start;
        return stats;
    }

    const WideCounters& wide() const { return wide_; }
    const std::map<uint32_t, uint64_t>& first_activation() const { return first_activation_; }
    const std::map<uint32_t, uint64_t>& last_increment() const { return last_increment_; }

private:
    void scan(const uint8_t* cur, size_t limit, uint64_t t, const SamplerOptions& opt,
              std::vector<uint32_t>& fresh) {
        const uint8_t* last = wide_.last.data();
        size_t words = limit / 8;
        const uint64_t* cw = reinterpret_cast<const uint64_t*>(cur);
        const uint64_t* lw = reinterpret_cast<const uint64_t*>(last);
        for (size_t w = 0; w < words; ++w) {
            if (cw[w] == lw[w]) continue;
            size_t base = w * 8;
            for (size_t b = 0; b < 8; ++b) handle_byte(base + b, cur[base + b], t, opt, fresh);
        }
        for (size_t i = words * 8; i < limit; ++i) handle_byte(i, cur[i], t, opt, fresh);
    }

    void handle_byte(size_t i, uint8_t value, uint64_t t, const SamplerOptions& opt,
                     std::vector<uint32_t>& fresh) {
        if (value == wide_.last[i]) return;
        wide_.update_index(i, value);
        if (opt.track_first_activation) {
            if (!first_activation_.count(static_cast<uint32_t>(i)))
                first_activation_[static_cast<uint32_t>(i)] = t;
            last_increment_[static_cast<uint32_t>(i)] = t;
        }
        if (value != 0 && !seen_[i]) {
            seen_[i] = 1;
            fresh.push_back(static_cast<uint32_t>(i));
        }
    }

    WideCounters wide_;
    std::vector<uint8_t> seen_;
    std::map<uint32_t, uint64_t> first_activation_;
    std::map<uint32_t, uint64_t> last_increment_;
};

/// Plain snapshot stream for callers that want the raw feed; `sink` gets the
/// region copy and timestamp of every snapshot taken.
inline SampleStats sample_loop(const uint8_t* region, size_t size,
                               const std::atomic<bool>& stop,
                               const std::function<void(const CounterSnapshot&)>& sink) {
    SampleStats stats;
    CounterSnapshot snap;
    snap.raw.resize(size);
    uint64_t start = monotonic_ns();
    bool draining = false;
    for (;;) {
        if (stop.load(std::memory_order_relaxed)) {
            if (draining) break;
            draining = true;
        }
        snap.t_ns = monotonic_ns();
        std::memcpy(snap.raw.data(), region, size);
        if (sink) sink(snap);
        ++stats.snapshots;
    }
    stats.duration_ns = monotonic_ns() - start;
    return stats;
}

}  // namespace derfuzz::cov
