#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "taskweave/dep_system.hpp"
#include "taskweave/sim_device.hpp"
#include "taskweave/substrate.hpp"

namespace tw::ta {

// Task-aware device integration. Replaces the two thread-hostile idioms of
// a plain device library:
//
//   - a task that must outlive its async ops binds each op's event to its
//     pending-op counter and returns; its dependents release only when the
//     last bound event completes (bind_event_async),
//   - a task that needs a result suspends and frees its worker instead of
//     blocking on the device (wait_transformed).
//
// One polling service task drives both: every `poll_period` units it applies
// due device completions, drains pending-op counters whose events finished
// (releasing deferred tasks), and resumes suspended waiters.
class TaskAware {
public:
    TaskAware(Substrate& sub, deps::DependencySystem& deps, sim::Device& dev,
              double poll_period);

    TaskAware(const TaskAware&) = delete;
    TaskAware& operator=(const TaskAware&) = delete;

    // Spawns the polling service task. Call once, before the work it serves.
    void start();

    // Ties the event to the calling task's pending-op counter: the task's
    // dependents stay unreleased until the event completes, even after the
    // body returns.
    void bind_event_async(sim::EventId ev);

    // Cooperative replacement for Device::wait: the calling task suspends
    // until a poll tick observes the event complete.
    void wait_transformed(sim::EventId ev);

    std::size_t events_polled() const;
    std::size_t ticks() const;
    std::size_t pending_binds() const;

private:
    friend class QueuePool;

    std::size_t poll_once(Time at);

    Substrate& sub_;
    deps::DependencySystem& deps_;
    sim::Device& dev_;
    double period_;
    InstanceId instance_;
    bool started_ = false;

    struct Bind {
        sim::EventId ev;
        TaskId task;
    };
    struct Waiter {
        sim::EventId ev;
        SuspendToken token;
    };

    mutable std::mutex mu_;
    std::deque<Bind> binds_;
    std::deque<Waiter> waiters_;
    std::size_t polled_ = 0;
    std::size_t ticks_ = 0;
};

// Fixed-capacity pool of device streams with suspending acquisition. A task
// that asks while all streams are out parks on a FIFO list and wakes holding
// the next stream returned.
class QueuePool {
public:
    QueuePool(TaskAware& ta, unsigned capacity);

    sim::StreamId acquire();
    void release(sim::StreamId stream);

    unsigned capacity() const { return capacity_; }
    std::size_t outstanding() const;
    // Streams held at the moment of asking, with their holder tasks.
    std::vector<std::pair<sim::StreamId, TaskId>> holders() const;

private:
    struct PoolWaiter {
        SuspendToken token;
        sim::StreamId granted = -1;
    };

    TaskAware& ta_;
    unsigned capacity_;

    mutable std::mutex mu_;
    std::vector<sim::StreamId> free_;
    unsigned created_ = 0;
    std::unordered_map<sim::StreamId, TaskId> held_;
    std::deque<std::shared_ptr<PoolWaiter>> waiters_;
};

} // namespace tw::ta
