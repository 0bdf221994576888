#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "taskweave/access.hpp"
#include "taskweave/run_log.hpp"
#include "taskweave/types.hpp"

namespace tw {

namespace deps {
class DependencySystem;
struct ReleaseOutcome;
}
class Timeline;

struct SubstrateConfig {
    unsigned workers = 1;
    ClockMode clock = ClockMode::virtual_time;
    SchedulingMode mode = SchedulingMode::unified;
    // Real-thread mode only: advance(1.0) busy-spins for this many seconds.
    double real_seconds_per_unit = 50e-6;
    std::size_t fiber_stack_bytes = 128 * 1024;
};

struct TaskDef {
    std::string label;
    std::vector<deps::AccessRegion> accesses;
    std::function<void()> body;
    // Virtual cost charged after the body returns, on top of any advance()
    // calls the body makes itself.
    double cost = 0.0;
    // Service/bookkeeping tasks (root drivers, pollers): excluded from
    // scenario DAG exports and from the drain condition.
    bool internal = false;
    bool service = false;
    // Spawned without a parent even when created inside a task, so no
    // taskwait ever covers it.
    bool detached = false;
};

namespace detail {
struct TokenState;
struct TaskRec;
struct TokenAccess;
} // namespace detail

// One-shot resume permit. Arms on prepare_suspend(); firing it before the
// owner parks makes the later suspend() return without waiting; firing it
// after wakes the task. Firing twice is a contract violation.
class SuspendToken {
public:
    SuspendToken() = default;
    bool valid() const { return st_ != nullptr; }

private:
    friend class Substrate;
    friend struct detail::TokenAccess;
    explicit SuspendToken(std::shared_ptr<detail::TokenState> st) : st_(std::move(st)) {}
    std::shared_ptr<detail::TokenState> st_;
};

// Cooperative scheduler substrate: a shared FIFO ready queue, one task per
// worker at any instant, and voluntary yield points only. Two clocks behind
// one interface: a deterministic single-threaded virtual clock, and real OS
// worker threads.
class Substrate {
public:
    static std::unique_ptr<Substrate> start(SubstrateConfig cfg, deps::DependencySystem& deps,
                                            RunLog& log);
    virtual ~Substrate() = default;

    virtual InstanceId register_instance(std::string name) = 0;
    virtual std::size_t submitted_count(InstanceId) const = 0;

    // Creates a task, infers its dependencies, and enqueues it if it has
    // none. Callable from inside a task (which becomes the parent) or from
    // outside between runs.
    virtual TaskId spawn(InstanceId instance, TaskDef def) = 0;

    // Drives the system until no task is live. Service tasks are asked to
    // stop once everything else drained. Throws ContractViolation with a
    // stuck-task diagnostic if the system deadlocks.
    virtual void run() = 0;

    // Fires a resume permit; see SuspendToken.
    virtual void resume(const SuspendToken& token,
                        Provenance provenance = Provenance::external_resume) = 0;

    // Completes a task whose body already returned, after the polling layer
    // drained its pending-op counter and obtained the release outcome.
    virtual void complete_deferred(TaskId id, const deps::ReleaseOutcome& outcome) = 0;

    // Resolves a block_pending() park: the task resumes at t, on the worker
    // it has been occupying the whole time. Virtual clock only.
    virtual void unblock_at(TaskId id, Time t) = 0;

    virtual unsigned worker_count() const = 0;
    virtual const SubstrateConfig& config() const = 0;
    virtual Time now() const = 0;
    virtual bool stop_requested() const = 0;
    // Workers currently executing an unblocked segment (oversubscription
    // model input).
    virtual unsigned running_worker_count() const = 0;
    // Virtual-time engine's event core; null under real threads.
    virtual Timeline* timeline() = 0;

protected:
    friend struct CurrentTaskAccess;
    virtual void op_advance(double cost) = 0;
    virtual void op_yield() = 0;
    virtual SuspendToken op_prepare_suspend() = 0;
    virtual void op_suspend(const SuspendToken&) = 0;
    virtual void op_sleep_for(double duration) = 0;
    virtual void op_taskwait() = 0;
    virtual void op_mark(std::string note) = 0;
    virtual void op_block_until(Time virtual_completion) = 0;
    virtual void op_block_pending() = 0;
    virtual void op_block_on(const std::function<void()>& wait) = 0;
    virtual Time op_task_now() = 0;
};

// Task-side operations on the calling task. All of them require a current
// task; calling outside one is a contract violation (in_task() excepted).
namespace this_task {

bool in_task();
TaskId id();
Substrate& substrate();
// The task's position on the clock: its virtual-time cursor (which runs
// ahead of the scheduler while the body executes) or wall time.
Time now();
// Charges virtual cost (virtual clock) or burns real CPU (real threads).
void advance(double cost);
// Gives up the worker and moves to the tail of the ready queue.
void yield();
SuspendToken prepare_suspend();
void suspend(const SuspendToken&);
void sleep_for(double duration);
// Waits for every direct child task to reach finished, including ones whose
// bodies returned with device operations still in flight.
void taskwait();
// Emits an annotation record into the run log at the current time.
void mark(std::string note);
// Parks the task as blocked-on-device until the given virtual completion
// instant (virtual clock) or until the wait callable returns (real threads).
// The worker is NOT freed: this is the pathology the task-aware path avoids.
void block_until(Time virtual_completion);
// Blocked park whose wake instant arrives later via Substrate::unblock_at.
void block_pending();
void block_on(const std::function<void()>& wait);

} // namespace this_task

} // namespace tw
