#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "derfuzz/cov/counters.hpp"

namespace derfuzz::cov {

/// Discovered identification counters: indices whose execution count tracks
/// the position of the object currently being processed, ordered by when
/// they first fire during a run (execution-phase order).
struct IfSet {
    std::vector<uint32_t> indices;
    std::map<uint32_t, uint64_t> first_activation;
    std::vector<size_t> candidate_counts;  // per discovery run, for diagnostics
    std::string diagnostic;                // non-empty when phases overlap

    bool empty() const { return indices.empty(); }
};

class IfDiscoveryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// What one discovery run must report back: final wrap-corrected counters
/// plus, for the confirmation pass, when each counter first and last moved.
struct IfRunObservation {
    WideCounters wide;
    std::map<uint32_t, uint64_t> first_activation;
    std::map<uint32_t, uint64_t> last_increment;
};

inline const std::vector<size_t>& default_if_sizes() {
    static const std::vector<size_t> sizes = {20, 100, 200, 400};
    return sizes;
}

/// Run the target against repositories of several batch sizes (manipulated
/// objects, so the counters hold up on ill-formed input too) and keep exactly
/// the counters whose final count equals the object count every time. A
/// confirmation run orders the survivors by first activation and checks that
/// their active windows do not interleave; overlapping loops make position
/// readings ambiguous and are reported in the diagnostic.
inline IfSet identify_ifs(const std::function<IfRunObservation(size_t)>& run_with_size,
                          std::vector<size_t> sizes = default_if_sizes()) {
    if (sizes.empty()) throw IfDiscoveryError("no test sizes given");
    IfSet result;
    std::set<uint32_t> filtered;
    bool first = true;
    for (size_t n : sizes) {
        IfRunObservation obs = run_with_size(n);
        std::set<uint32_t> candidates;
        for (size_t i = 0; i < obs.wide.size(); ++i)
            if (obs.wide.logical[i] == n) candidates.insert(static_cast<uint32_t>(i));
        if (first) {
            filtered = std::move(candidates);
            first = false;
        } else {
            std::set<uint32_t> kept;
            std::set_intersection(filtered.begin(), filtered.end(), candidates.begin(),
                                  candidates.end(), std::inserter(kept, kept.begin()));
            filtered = std::move(kept);
        }
        result.candidate_counts.push_back(filtered.size());
        if (filtered.empty()) break;
    }
    if (filtered.empty())
        throw IfDiscoveryError(
            "no identification functions found; target is likely not processing objects "
            "sequentially");

    // confirmation run: phase ordering by first activation
    IfRunObservation confirm = run_with_size(sizes.back());
    std::vector<uint32_t> ordered(filtered.begin(), filtered.end());
    std::stable_sort(ordered.begin(), ordered.end(), [&](uint32_t a, uint32_t b) {
        uint64_t ta = confirm.first_activation.count(a) ? confirm.first_activation.at(a) : 0;
        uint64_t tb = confirm.first_activation.count(b) ? confirm.first_activation.at(b) : 0;
        return ta < tb;
    });
    result.indices = std::move(ordered);
    for (uint32_t idx : result.indices)
        if (confirm.first_activation.count(idx))
            result.first_activation[idx] = confirm.first_activation.at(idx);

    // phase-sequential check: each loop should finish before the next starts
    for (size_t i = 0; i + 1 < result.indices.size(); ++i) {
        uint32_t cur = result.indices[i];
        uint32_t next = result.indices[i + 1];
        if (confirm.last_increment.count(cur) && confirm.first_activation.count(next) &&
            confirm.last_increment.at(cur) > confirm.first_activation.at(next)) {
            result.diagnostic =
                "identification counters " + std::to_string(cur) + " and " +
                std::to_string(next) +
                " have overlapping active windows; attribution assumes phase-sequential "
                "loops";
        }
    }
    return result;
}

}  // namespace derfuzz::cov
