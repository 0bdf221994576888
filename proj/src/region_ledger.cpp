#include "taskweave/region_ledger.hpp"

#include <algorithm>

namespace tw::deps {

std::vector<TaskId> RegionLedger::conflicts(const AccessRegion& r) const {
    std::vector<TaskId> out;
    if (r.length == 0)
        return out;
    auto it = segments_.upper_bound(r.base);
    if (it != segments_.begin())
        --it;
    for (; it != segments_.end() && it->first < r.end(); ++it) {
        const Segment& s = it->second;
        if (s.end <= r.base)
            continue;
        if (s.writer)
            out.push_back(*s.writer);
        if (r.mode != AccessMode::read)
            out.insert(out.end(), s.readers.begin(), s.readers.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void RegionLedger::cut(std::uint64_t x) {
    auto it = segments_.upper_bound(x);
    if (it == segments_.begin())
        return;
    --it;
    if (it->first == x || it->second.end <= x)
        return;
    Segment right = it->second;
    it->second.end = x;
    segments_.emplace(x, std::move(right));
}

void RegionLedger::apply(const AccessRegion& r, TaskId task) {
    if (r.length == 0)
        return;
    cut(r.base);
    cut(r.end());

    if (r.mode != AccessMode::read) {
        // The whole interval gets one fresh segment owned by this writer.
        auto it = segments_.lower_bound(r.base);
        while (it != segments_.end() && it->first < r.end())
            it = segments_.erase(it);
        segments_.emplace(r.base, Segment{r.end(), task, {}});
        return;
    }

    // Read: register as reader on covered segments and fill the gaps with
    // writer-less segments so later writers see this reader everywhere.
    std::uint64_t pos = r.base;
    auto it = segments_.lower_bound(r.base);
    while (pos < r.end()) {
        if (it == segments_.end() || it->first >= r.end()) {
            it = segments_.emplace_hint(it, pos, Segment{r.end(), std::nullopt, {task}});
            ++it;
            pos = r.end();
        } else if (it->first > pos) {
            it = segments_.emplace_hint(it, pos, Segment{it->first, std::nullopt, {task}});
            pos = it->second.end;
            ++it;
        } else {
            Segment& s = it->second;
            if (std::find(s.readers.begin(), s.readers.end(), task) == s.readers.end())
                s.readers.push_back(task);
            pos = s.end;
            ++it;
        }
    }
}

} // namespace tw::deps
