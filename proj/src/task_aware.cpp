#include "taskweave/task_aware.hpp"

#include <algorithm>
#include <string>

namespace tw::ta {

TaskAware::TaskAware(Substrate& sub, deps::DependencySystem& deps, sim::Device& dev,
                     double poll_period)
    : sub_(sub), deps_(deps), dev_(dev), period_(poll_period) {
    if (poll_period <= 0)
        throw ConfigError("poll period must be positive");
    instance_ = sub_.register_instance("task-aware");
}

void TaskAware::start() {
    if (started_)
        throw ContractViolation("polling task started twice");
    started_ = true;
    TaskDef def;
    def.label = "device-poll";
    def.internal = true;
    def.service = true;
    def.detached = true;
    def.body = [this] {
        for (;;) {
            this_task::sleep_for(period_);
            bool drained;
            {
                std::lock_guard lk(mu_);
                drained = binds_.empty() && waiters_.empty();
            }
            if (sub_.stop_requested() && drained)
                return;
            std::size_t k = poll_once(this_task::now());
            if (k > 0)
                this_task::mark("poll_resolved=" + std::to_string(k));
        }
    };
    sub_.spawn(instance_, std::move(def));
}

void TaskAware::bind_event_async(sim::EventId ev) {
    TaskId self = this_task::id();
    deps_.increment_pending(self);
    std::lock_guard lk(mu_);
    binds_.push_back(Bind{ev, self});
}

void TaskAware::wait_transformed(sim::EventId ev) {
    if (dev_.query(ev))
        return;
    SuspendToken token = this_task::prepare_suspend();
    {
        std::lock_guard lk(mu_);
        waiters_.push_back(Waiter{ev, token});
    }
    this_task::suspend(token);
    dev_.process_completions_until(this_task::now());
}

// One tick at time `at`: apply due completions, then drain counters, then
// wake waiters. Bind resolution can finish tasks, which releases dependents
// through the substrate before any waiter resumes at this tick.
std::size_t TaskAware::poll_once(Time at) {
    dev_.process_completions_until(at);

    std::vector<Bind> due_binds;
    std::vector<Waiter> due_waits;
    {
        std::lock_guard lk(mu_);
        ++ticks_;
        for (auto it = binds_.begin(); it != binds_.end();) {
            if (dev_.event_time(it->ev) <= at) {
                due_binds.push_back(*it);
                it = binds_.erase(it);
            } else {
                ++it;
            }
        }
        for (auto it = waiters_.begin(); it != waiters_.end();) {
            if (dev_.event_time(it->ev) <= at) {
                due_waits.push_back(*it);
                it = waiters_.erase(it);
            } else {
                ++it;
            }
        }
        polled_ += due_binds.size() + due_waits.size();
    }

    for (const Bind& b : due_binds) {
        deps::ReleaseOutcome out = deps_.decrement_pending(b.task);
        if (out.released)
            sub_.complete_deferred(b.task, out);
    }
    for (const Waiter& w : due_waits)
        sub_.resume(w.token, Provenance::poll_resume);
    return due_binds.size() + due_waits.size();
}

std::size_t TaskAware::events_polled() const {
    std::lock_guard lk(mu_);
    return polled_;
}

std::size_t TaskAware::ticks() const {
    std::lock_guard lk(mu_);
    return ticks_;
}

std::size_t TaskAware::pending_binds() const {
    std::lock_guard lk(mu_);
    return binds_.size();
}

QueuePool::QueuePool(TaskAware& ta, unsigned capacity) : ta_(ta), capacity_(capacity) {
    if (capacity == 0)
        throw ConfigError("stream pool needs capacity of at least one");
}

sim::StreamId QueuePool::acquire() {
    TaskId self = this_task::id();
    std::shared_ptr<PoolWaiter> me;
    {
        std::lock_guard lk(mu_);
        if (!free_.empty()) {
            sim::StreamId s = free_.back();
            free_.pop_back();
            held_.emplace(s, self);
            return s;
        }
        if (created_ < capacity_) {
            ++created_;
            sim::StreamId s = ta_.dev_.create_stream();
            held_.emplace(s, self);
            return s;
        }
        me = std::make_shared<PoolWaiter>();
        me->token = this_task::prepare_suspend();
        waiters_.push_back(me);
    }
    this_task::suspend(me->token);
    std::lock_guard lk(mu_);
    held_.emplace(me->granted, self);
    return me->granted;
}

void QueuePool::release(sim::StreamId stream) {
    std::shared_ptr<PoolWaiter> next;
    {
        std::lock_guard lk(mu_);
        if (held_.erase(stream) == 0)
            throw ContractViolation("released stream " + std::to_string(stream) +
                                    " the pool did not hand out");
        if (!waiters_.empty()) {
            next = waiters_.front();
            waiters_.pop_front();
            next->granted = stream;
        } else {
            free_.push_back(stream);
        }
    }
    if (next)
        ta_.sub_.resume(next->token);
}

std::size_t QueuePool::outstanding() const {
    std::lock_guard lk(mu_);
    return held_.size();
}

std::vector<std::pair<sim::StreamId, TaskId>> QueuePool::holders() const {
    std::lock_guard lk(mu_);
    std::vector<std::pair<sim::StreamId, TaskId>> out(held_.begin(), held_.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace tw::ta
