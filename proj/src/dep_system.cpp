#include "taskweave/dep_system.hpp"

#include <algorithm>
#include <sstream>

namespace tw::deps {

DependencySystem::Record& DependencySystem::rec(TaskId id) {
    auto it = index_.find(id);
    if (it == index_.end())
        throw ContractViolation("unknown task id " + std::to_string(id));
    return records_[it->second];
}

const DependencySystem::Record& DependencySystem::rec(TaskId id) const {
    auto it = index_.find(id);
    if (it == index_.end())
        throw ContractViolation("unknown task id " + std::to_string(id));
    return records_[it->second];
}

std::vector<TaskId> DependencySystem::register_task(TaskId id,
                                                    std::span<const AccessRegion> accesses,
                                                    std::optional<TaskId> parent,
                                                    std::string label, bool internal) {
    std::lock_guard lk(mu_);
    if (index_.count(id))
        throw ContractViolation("duplicate task id " + std::to_string(id));
    if (parent && !index_.count(*parent))
        throw ContractViolation("unknown parent task " + std::to_string(*parent));
    for (const AccessRegion& a : accesses)
        if (a.length == 0)
            throw ContractViolation("zero-length access region on task " + std::to_string(id));

    // Conflicts are computed against the pre-registration ledger so a task
    // never depends on itself through its own access list.
    std::vector<TaskId> preds;
    for (const AccessRegion& a : accesses) {
        std::vector<TaskId> c = ledger_.conflicts(a);
        preds.insert(preds.end(), c.begin(), c.end());
    }
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    std::erase_if(preds, [&](TaskId p) {
        return p == id || records_[index_.at(p)].desc.state == TaskState::finished;
    });

    for (const AccessRegion& a : accesses)
        ledger_.apply(a, id);

    Record r;
    r.desc.id = id;
    r.desc.label = std::move(label);
    r.desc.accesses.assign(accesses.begin(), accesses.end());
    r.desc.parent = parent;
    r.desc.internal = internal;
    r.preds_remaining = static_cast<std::uint32_t>(preds.size());
    for (TaskId p : preds)
        records_[index_.at(p)].successors.push_back(id);
    if (parent)
        records_[index_.at(*parent)].live_children++;
    index_.emplace(id, records_.size());
    records_.push_back(std::move(r));
    return preds;
}

void DependencySystem::finish_locked(Record& r, ReleaseOutcome& out) {
    r.desc.state = TaskState::finished;
    ++finished_;
    out.released = true;
    for (TaskId s : r.successors) {
        Record& succ = rec(s);
        if (--succ.preds_remaining == 0)
            out.newly_ready.push_back(s);
    }
    if (r.desc.parent) {
        Record& p = rec(*r.desc.parent);
        if (--p.live_children == 0 && p.notify_children_drain) {
            p.notify_children_drain = false;
            out.parent_to_wake = p.desc.id;
        }
    }
}

ReleaseOutcome DependencySystem::notify_body_finished(TaskId id) {
    std::lock_guard lk(mu_);
    Record& r = rec(id);
    if (r.desc.state != TaskState::running)
        throw ContractViolation("notify_body_finished on task " + std::to_string(id) +
                                " in state " + to_string(r.desc.state));
    ReleaseOutcome out;
    if (r.desc.pending_ops > 0) {
        r.desc.state = TaskState::body_finished_pending_ops;
        return out;
    }
    finish_locked(r, out);
    return out;
}

void DependencySystem::increment_pending(TaskId id) {
    std::lock_guard lk(mu_);
    Record& r = rec(id);
    if (r.desc.state != TaskState::running)
        throw ContractViolation("pending-op bind outside the running body of task " +
                                std::to_string(id));
    ++r.desc.pending_ops;
}

ReleaseOutcome DependencySystem::decrement_pending(TaskId id) {
    std::lock_guard lk(mu_);
    Record& r = rec(id);
    if (r.desc.pending_ops == 0)
        throw ContractViolation("pending-op counter underflow on task " + std::to_string(id));
    --r.desc.pending_ops;
    ReleaseOutcome out;
    if (r.desc.pending_ops == 0 && r.desc.state == TaskState::body_finished_pending_ops)
        finish_locked(r, out);
    return out;
}

void DependencySystem::mark_ready(TaskId id) {
    std::lock_guard lk(mu_);
    Record& r = rec(id);
    if (r.desc.state != TaskState::created && r.desc.state != TaskState::running &&
        r.desc.state != TaskState::suspended)
        throw ContractViolation("illegal transition to ready from " + std::string(to_string(r.desc.state)));
    r.desc.state = TaskState::ready;
}

void DependencySystem::mark_running(TaskId id) {
    std::lock_guard lk(mu_);
    Record& r = rec(id);
    if (r.desc.state != TaskState::ready)
        throw ContractViolation("illegal transition to running from " + std::string(to_string(r.desc.state)));
    r.desc.state = TaskState::running;
}

void DependencySystem::mark_suspended(TaskId id) {
    std::lock_guard lk(mu_);
    Record& r = rec(id);
    if (r.desc.state != TaskState::running)
        throw ContractViolation("illegal transition to suspended from " + std::string(to_string(r.desc.state)));
    r.desc.state = TaskState::suspended;
}

bool DependencySystem::request_children_notification(TaskId parent) {
    std::lock_guard lk(mu_);
    Record& r = rec(parent);
    if (r.live_children == 0)
        return false;
    r.notify_children_drain = true;
    return true;
}

TaskState DependencySystem::state(TaskId id) const {
    std::lock_guard lk(mu_);
    return rec(id).desc.state;
}

std::uint32_t DependencySystem::pending_ops(TaskId id) const {
    std::lock_guard lk(mu_);
    return rec(id).desc.pending_ops;
}

const std::string& DependencySystem::label(TaskId id) const {
    std::lock_guard lk(mu_);
    return rec(id).desc.label;
}

std::vector<TaskId> DependencySystem::task_ids() const {
    std::lock_guard lk(mu_);
    std::vector<TaskId> out;
    out.reserve(records_.size());
    for (const Record& r : records_)
        out.push_back(r.desc.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t DependencySystem::task_count() const {
    std::lock_guard lk(mu_);
    return records_.size();
}

std::size_t DependencySystem::finished_count() const {
    std::lock_guard lk(mu_);
    return finished_;
}

std::vector<std::pair<TaskId, TaskId>> DependencySystem::edges() const {
    std::lock_guard lk(mu_);
    std::vector<std::pair<TaskId, TaskId>> out;
    for (const Record& r : records_)
        for (TaskId s : r.successors)
            out.emplace_back(r.desc.id, s);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<TaskId> DependencySystem::predecessors_of(TaskId id) const {
    std::lock_guard lk(mu_);
    rec(id); // existence check
    std::vector<TaskId> out;
    for (const Record& r : records_)
        if (std::find(r.successors.begin(), r.successors.end(), id) != r.successors.end())
            out.push_back(r.desc.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::string DependencySystem::export_dot(bool include_internal) const {
    std::lock_guard lk(mu_);
    std::vector<const Record*> nodes;
    for (const Record& r : records_)
        if (include_internal || !r.desc.internal)
            nodes.push_back(&r);
    std::sort(nodes.begin(), nodes.end(),
              [](const Record* a, const Record* b) { return a->desc.id < b->desc.id; });

    std::ostringstream os;
    os << "digraph deps {\n";
    for (const Record* r : nodes)
        os << "  t" << r->desc.id << " [label=\"" << r->desc.id << ":" << r->desc.label
           << ":" << to_string(r->desc.state) << "\"];\n";
    std::vector<std::pair<TaskId, TaskId>> es;
    for (const Record* r : nodes)
        for (TaskId s : r->successors)
            if (include_internal || !rec(s).desc.internal)
                es.emplace_back(r->desc.id, s);
    std::sort(es.begin(), es.end());
    for (auto& [a, b] : es)
        os << "  t" << a << " -> t" << b << ";\n";
    os << "}\n";
    return os.str();
}

} // namespace tw::deps
