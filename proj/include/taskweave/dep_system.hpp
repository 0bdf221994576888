#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "taskweave/access.hpp"
#include "taskweave/region_ledger.hpp"
#include "taskweave/types.hpp"

namespace tw::deps {

struct TaskDescriptor {
    TaskId id = kNoTask;
    std::string label;
    std::vector<AccessRegion> accesses;
    TaskState state = TaskState::created;
    std::uint32_t pending_ops = 0;
    std::optional<TaskId> parent;
    bool internal = false; // service/root tasks, excluded from scenario DAG exports
};

// Result of an operation that may complete a task. `newly_ready` are
// successors whose last predecessor was just released; the dependency system
// never dispatches them, the scheduler does.
struct ReleaseOutcome {
    bool released = false;
    std::vector<TaskId> newly_ready;
    std::optional<TaskId> parent_to_wake;
};

// Dynamic DAG construction over byte-interval accesses plus the deferred
// release counter that lets a task's body finish while asynchronous device
// operations bound to it are still in flight.
class DependencySystem {
public:
    // Infers RAW/WAR/WAW predecessors of the new task against everything
    // registered so far, records the edges, and returns the unfinished
    // predecessors (ascending ids). Registration order defines dependency
    // order; calls must be serialized per creating context (a single mutex
    // serializes them globally here).
    std::vector<TaskId> register_task(TaskId id, std::span<const AccessRegion> accesses,
                                      std::optional<TaskId> parent, std::string label,
                                      bool internal = false);

    // Body returned. If no device operations are pending the task finishes
    // and its dependencies are released; otherwise it parks in
    // body_finished_pending_ops until the counter drains.
    ReleaseOutcome notify_body_finished(TaskId id);

    // Deferred-release counter. Increments come from the running task
    // itself; decrements from the polling path, one per completed bound
    // operation. Dependencies are released exactly once, on entry to
    // finished.
    void increment_pending(TaskId id);
    ReleaseOutcome decrement_pending(TaskId id);

    // Scheduling-state mirror, driven by the scheduler.
    void mark_ready(TaskId id);
    void mark_running(TaskId id);
    void mark_suspended(TaskId id);

    // Arms a one-shot notification fired when the last live direct child of
    // `parent` finishes. Returns false (and arms nothing) when no child is
    // live, i.e. a waiter need not park.
    bool request_children_notification(TaskId parent);

    TaskState state(TaskId id) const;
    std::uint32_t pending_ops(TaskId id) const;
    const std::string& label(TaskId id) const;
    std::vector<TaskId> task_ids() const; // ascending
    std::size_t task_count() const;
    std::size_t finished_count() const;
    // Dependency edges (predecessor, successor), ascending.
    std::vector<std::pair<TaskId, TaskId>> edges() const;
    std::vector<TaskId> predecessors_of(TaskId id) const;

    // Graphviz export: one node per task labeled "id:label:state", one edge
    // per dependency, both in ascending id order.
    std::string export_dot(bool include_internal = true) const;

private:
    struct Record {
        TaskDescriptor desc;
        std::vector<TaskId> successors;
        std::uint32_t preds_remaining = 0;
        std::uint32_t live_children = 0;
        bool notify_children_drain = false;
    };

    Record& rec(TaskId id);
    const Record& rec(TaskId id) const;
    void finish_locked(Record& r, ReleaseOutcome& out);

    mutable std::mutex mu_;
    std::vector<Record> records_;                     // registration order
    std::unordered_map<TaskId, std::size_t> index_;   // id -> records_ slot
    RegionLedger ledger_;
    std::size_t finished_ = 0;
};

} // namespace tw::deps
