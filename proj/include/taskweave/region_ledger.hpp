#pragma once

#include <map>
#include <optional>
#include <vector>

#include "taskweave/access.hpp"

namespace tw::deps {

// Byte-interval bookkeeping behind dependency inference. For every byte the
// ledger knows the last writer and the readers seen since that write.
// Partially overlapping accesses split intervals so each segment carries
// exact information; the map holds disjoint segments keyed by base address.
class RegionLedger {
public:
    // Task ids whose prior accesses conflict with `r` under the usual rules:
    // a read conflicts with the last writer; a write or readwrite conflicts
    // with the last writer and every reader since that write. Result is
    // deduplicated, ascending.
    std::vector<TaskId> conflicts(const AccessRegion& r) const;

    // Records that `task` performed access `r`. Reads append to the reader
    // sets; writes and readwrites become the new last writer and clear the
    // reader sets underneath.
    void apply(const AccessRegion& r, TaskId task);

    std::size_t segment_count() const { return segments_.size(); }

private:
    struct Segment {
        std::uint64_t end = 0;
        std::optional<TaskId> writer;
        std::vector<TaskId> readers;
    };

    // Ensures a segment boundary exists at x (splitting the covering
    // segment, if any), so [b, e) edits never bisect a segment.
    void cut(std::uint64_t x);

    std::map<std::uint64_t, Segment> segments_;
};

} // namespace tw::deps
