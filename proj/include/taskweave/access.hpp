#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "taskweave/types.hpp"

namespace tw::deps {

enum class AccessMode : std::uint8_t { read, write, readwrite };

const char* to_string(AccessMode m);

// Half-open byte interval [base, base + length) of the flat address space.
struct AccessRegion {
    std::uint64_t base = 0;
    std::uint64_t length = 0;
    AccessMode mode = AccessMode::read;

    std::uint64_t end() const { return base + length; }
    bool overlaps(const AccessRegion& o) const {
        return base < o.end() && o.base < end();
    }
    friend bool operator==(const AccessRegion&, const AccessRegion&) = default;
};

// One iterator dimension of a multi-dependency: values begin, begin+step, ...
// strictly below end.
struct IterRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::int64_t step = 1;
};

// Affine region template: for every point (i0, .., ik) of the iteration
// space, one region of `length` bytes at offset + sum(coeff[d] * i_d).
struct MultidepTemplate {
    std::vector<IterRange> dims;
    std::vector<std::int64_t> coeffs; // one per dim
    std::int64_t offset = 0;
    std::uint64_t length = 1;
    AccessMode mode = AccessMode::read;
};

// Eagerly expands the template into concrete regions, innermost dimension
// fastest, preserving iteration order. Throws ContractViolation on a
// malformed template (step <= 0, coeffs/dims size mismatch, zero length) and
// ConfigError if any address computation leaves [0, 2^63).
std::vector<AccessRegion> expand_multidep(const MultidepTemplate& t);

} // namespace tw::deps
