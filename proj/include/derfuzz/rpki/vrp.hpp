#pragma once

#include <cstdint>
#include <set>
#include <sstream>
#include <string>

namespace derfuzz::rpki {

/// Validated payload triple as emitted by relying parties.
struct VrpTriple {
    uint64_t asn = 0;
    std::string prefix;  // "a.b.c.d/len" or "v6:<hex>/len"
    uint32_t max_length = 0;

    auto operator<=>(const VrpTriple&) const = default;

    std::string to_line() const {
        std::ostringstream out;
        out << asn << "," << prefix << "," << max_length;
        return out.str();
    }

    static std::optional<VrpTriple> from_line(const std::string& line) {
        VrpTriple v;
        size_t c1 = line.find(',');
        size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) return std::nullopt;
        try {
            v.asn = std::stoull(line.substr(0, c1));
            v.prefix = line.substr(c1 + 1, c2 - c1 - 1);
            v.max_length = static_cast<uint32_t>(std::stoul(line.substr(c2 + 1)));
        } catch (const std::exception&) {
            return std::nullopt;
        }
        return v;
    }
};

using VrpSet = std::set<VrpTriple>;

}  // namespace derfuzz::rpki
