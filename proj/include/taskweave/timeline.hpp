#pragma once

#include <functional>
#include <queue>
#include <vector>

#include "taskweave/types.hpp"

namespace tw {

// Priority classes for events sharing a timestamp. Device completions apply
// before anything else observes that instant (a polling tick at t must see
// every completion with time <= t and its memory effects); blocked tasks
// continue next; scheduling actions follow.
enum class EventClass : std::uint8_t {
    device_completion = 0,
    unblock = 1,
    scheduling = 2,
};

// Single-threaded discrete-event core of the virtual clock. Handlers may
// push new events at or after the current time; processing order is total:
// (time, class, push sequence).
class Timeline {
public:
    Time now() const { return now_; }

    void schedule(Time at, EventClass cls, std::function<void()> fn) {
        if (at < now_)
            throw ContractViolation("timeline: event scheduled in the past");
        heap_.push(Ev{at, cls, seq_++, std::move(fn)});
    }

    bool empty() const { return heap_.empty(); }

    // Pops and runs the earliest event, advancing the clock to it.
    void step() {
        // const_cast: priority_queue::top is const but the entry is moved
        // out right before pop, which never reorders the heap.
        Ev ev = std::move(const_cast<Ev&>(heap_.top()));
        heap_.pop();
        now_ = ev.at;
        ev.fn();
    }

    void run_until_idle() {
        while (!heap_.empty())
            step();
    }

private:
    struct Ev {
        Time at;
        EventClass cls;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Ev& a, const Ev& b) const {
            if (a.at != b.at)
                return a.at > b.at;
            if (a.cls != b.cls)
                return a.cls > b.cls;
            return a.seq > b.seq;
        }
    };

    Time now_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Ev, std::vector<Ev>, Later> heap_;
};

} // namespace tw
