#include "substrate_impl.hpp"

namespace tw::detail {

Current& current() {
    thread_local Current c;
    return c;
}

} // namespace tw::detail

namespace tw {

Substrate& CurrentTaskAccess::engine() {
    detail::Current& c = detail::current();
    if (!c.engine || !c.rec)
        throw ContractViolation("task-side operation called outside a task");
    return *c.engine;
}

detail::TaskRec& CurrentTaskAccess::rec() {
    detail::Current& c = detail::current();
    if (!c.rec)
        throw ContractViolation("task-side operation called outside a task");
    return *c.rec;
}

std::unique_ptr<Substrate> Substrate::start(SubstrateConfig cfg, deps::DependencySystem& deps,
                                            RunLog& log) {
    if (cfg.workers == 0)
        throw ConfigError("substrate needs at least one worker");
    if (cfg.clock == ClockMode::virtual_time)
        return detail::make_virtual_substrate(cfg, deps, log);
    return detail::make_threaded_substrate(cfg, deps, log);
}

namespace this_task {

bool in_task() { return detail::current().rec != nullptr; }

TaskId id() { return CurrentTaskAccess::rec().id; }

Substrate& substrate() { return CurrentTaskAccess::engine(); }

Time now() { return CurrentTaskAccess::task_now(); }

void advance(double cost) { CurrentTaskAccess::advance(cost); }
void yield() { CurrentTaskAccess::yield(); }
SuspendToken prepare_suspend() { return CurrentTaskAccess::prepare(); }
void suspend(const SuspendToken& t) { CurrentTaskAccess::suspend(t); }
void sleep_for(double d) { CurrentTaskAccess::sleep_for(d); }
void taskwait() { CurrentTaskAccess::taskwait(); }
void mark(std::string note) { CurrentTaskAccess::mark(std::move(note)); }
void block_until(Time t) { CurrentTaskAccess::block_until(t); }
void block_pending() { CurrentTaskAccess::block_pending(); }
void block_on(const std::function<void()>& w) { CurrentTaskAccess::block_on(w); }

} // namespace this_task

} // namespace tw
