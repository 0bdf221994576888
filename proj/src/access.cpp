#include "taskweave/access.hpp"

#include <limits>

namespace tw::deps {

const char* to_string(AccessMode m) {
    switch (m) {
    case AccessMode::read: return "read";
    case AccessMode::write: return "write";
    case AccessMode::readwrite: return "readwrite";
    }
    return "?";
}

namespace {

// Points of one dimension, in iteration order.
std::vector<std::int64_t> range_points(const IterRange& r) {
    std::vector<std::int64_t> pts;
    for (std::int64_t v = r.begin; v < r.end; v += r.step)
        pts.push_back(v);
    return pts;
}

} // namespace

std::vector<AccessRegion> expand_multidep(const MultidepTemplate& t) {
    if (t.dims.size() != t.coeffs.size())
        throw ContractViolation("expand_multidep: coeffs/dims size mismatch");
    if (t.length == 0)
        throw ContractViolation("expand_multidep: zero-length region template");
    for (const IterRange& r : t.dims) {
        if (r.step <= 0)
            throw ContractViolation("expand_multidep: non-positive step");
    }

    std::vector<std::vector<std::int64_t>> axes;
    axes.reserve(t.dims.size());
    std::size_t count = 1;
    for (const IterRange& r : t.dims) {
        axes.push_back(range_points(r));
        count *= axes.back().size();
    }

    std::vector<AccessRegion> out;
    out.reserve(count);
    std::vector<std::size_t> idx(t.dims.size(), 0);
    for (std::size_t n = 0; n < count; ++n) {
        __int128 base = t.offset;
        for (std::size_t d = 0; d < idx.size(); ++d)
            base += static_cast<__int128>(t.coeffs[d]) * axes[d][idx[d]];
        __int128 end = base + static_cast<__int128>(t.length);
        if (base < 0 || end > std::numeric_limits<std::int64_t>::max())
            throw ConfigError("expand_multidep: region outside the address space");
        out.push_back(AccessRegion{static_cast<std::uint64_t>(base), t.length, t.mode});
        // Odometer increment, innermost dimension fastest.
        for (std::size_t d = idx.size(); d-- > 0;) {
            if (++idx[d] < axes[d].size())
                break;
            idx[d] = 0;
        }
    }
    return out;
}

} // namespace tw::deps
