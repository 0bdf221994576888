#include <algorithm>
#include <queue>
#include <sstream>

#include "substrate_impl.hpp"
#include "taskweave/timeline.hpp"

namespace tw::detail {

// Deterministic single-threaded engine. Time is a discrete-event clock;
// task bodies run as fibers whose real code executes at segment start while
// their virtual cost accrues on a per-task cursor. Everything observable
// (dispatch, release, device completion) is an event ordered by
// (time, class, sequence), so identical inputs replay identically.
class VirtualSubstrate final : public SubstrateBase {
public:
    VirtualSubstrate(SubstrateConfig cfg, deps::DependencySystem& deps, RunLog& log)
        : SubstrateBase(cfg, deps, log), worker_task_(cfg.workers, kNoTask) {}

    TaskId spawn(InstanceId instance, TaskDef def) override {
        validate(def);
        inst(instance);
        TaskRec* creator = current().rec;
        Time at = creator ? creator->cursor : tl_.now();
        TaskId id = next_id_++;
        std::optional<TaskId> parent = creator && !def.detached
                                           ? std::optional<TaskId>(creator->id)
                                           : std::nullopt;

        std::vector<TaskId> preds =
            deps_.register_task(id, def.accesses, parent, def.label, def.internal);

        auto rec = std::make_unique<TaskRec>();
        rec->id = id;
        rec->instance = instance;
        rec->def = std::move(def);
        rec->cursor = at;
        bool service = rec->def.service;
        std::string label = rec->def.label;
        tasks_.emplace(id, std::move(rec));

        ++live_total_;
        if (!service)
            ++live_nonservice_;
        count_submit(instance);
        log_.append({at, creator ? creator->worker : kNoWorker, id, Transition::created,
                     Provenance::none, std::move(label)});
        if (preds.empty())
            make_ready(id, at, Provenance::submit);
        return id;
    }

    void run() override {
        if (current().rec)
            throw ContractViolation("run() called from inside a task");
        if (in_run_)
            throw ContractViolation("run() is not reentrant");
        in_run_ = true;
        stopping_ = false;
        if (live_nonservice_ == 0)
            stop_services();
        tl_.run_until_idle();
        in_run_ = false;
        if (live_total_ != 0)
            throw ContractViolation("substrate deadlock: " + stuck_diagnostic());
    }

    void resume(const SuspendToken& token, Provenance prov) override {
        if (!token.valid())
            throw ContractViolation("resume of an empty token");
        fire_token(TokenAccess::state(token), prov);
    }

    Time now() const override { return tl_.now(); }
    bool stop_requested() const override { return stopping_; }
    unsigned running_worker_count() const override { return busy_running_; }
    Timeline* timeline() override { return &tl_; }

protected:
    void op_advance(double cost) override {
        if (cost < 0)
            throw ContractViolation("advance with negative cost");
        cur().cursor += cost;
    }

    void op_yield() override {
        TaskRec& r = cur();
        r.park = ParkKind::yielded;
        r.fiber->park();
        r.park = ParkKind::none;
    }

    SuspendToken op_prepare_suspend() override {
        auto st = std::make_shared<TokenState>();
        st->task = cur().id;
        return TokenAccess::wrap(st);
    }

    void op_suspend(const SuspendToken& token) override {
        TaskRec& r = cur();
        if (!token.valid() || TokenAccess::state(token)->task != r.id)
            throw ContractViolation("suspend with a token the task does not own");
        {
            std::lock_guard lk(TokenAccess::state(token)->mu);
            if (TokenAccess::state(token)->s == TokenState::S::fired) {
                // Resume landed before the park: consume and keep running, no
                // earlier than the instant the permit was fired.
                TokenAccess::state(token)->s = TokenState::S::consumed;
                r.cursor = std::max(r.cursor, TokenAccess::state(token)->fire_at);
                return;
            }
            if (TokenAccess::state(token)->s != TokenState::S::armed)
                throw ContractViolation("suspend with a spent token");
        }
        r.park = ParkKind::token;
        r.park_token = TokenAccess::state(token);
        r.fiber->park();
        r.park = ParkKind::none;
        r.park_token.reset();
    }

    void op_sleep_for(double duration) override {
        if (duration < 0)
            throw ContractViolation("sleep_for with negative duration");
        TaskRec& r = cur();
        if (stopping_ && r.def.service)
            return; // shutting down: skip the nap so the loop can observe it
        r.timer_until = r.cursor + duration;
        r.park = ParkKind::timer;
        r.fiber->park();
        r.park = ParkKind::none;
    }

    void op_taskwait() override {
        TaskRec& r = cur();
        SuspendToken token = op_prepare_suspend();
        r.wait_token = TokenAccess::state(token);
        if (!deps_.request_children_notification(r.id)) {
            r.wait_token.reset();
            return;
        }
        op_suspend(token);
        r.wait_token.reset();
    }

    void op_mark(std::string note) override {
        TaskRec& r = cur();
        log_.mark(r.cursor, r.worker, std::move(note));
    }

    void op_block_until(Time completion) override {
        TaskRec& r = cur();
        if (completion <= r.cursor)
            return;
        r.block_until = completion;
        r.park = ParkKind::blocked;
        r.fiber->park();
        r.park = ParkKind::none;
    }

    // Blocks with the wake instant not yet known; someone must later call
    // unblock_at. Models a synchronous call into a foreign runtime whose
    // completion is resolved by that runtime's own event flow.
    void op_block_pending() override {
        TaskRec& r = cur();
        r.block_until = kBlockPending;
        r.park = ParkKind::blocked;
        r.fiber->park();
        r.park = ParkKind::none;
    }

    void op_block_on(const std::function<void()>&) override {
        throw ContractViolation("native blocking wait under the virtual clock");
    }

    Time op_task_now() override { return cur().cursor; }

private:
    // FIFO by (ready instant, arrival order): a yield at time t lands behind
    // everything already queued for t.
    struct ReadyEntry {
        Time at;
        std::uint64_t seq;
        TaskId id;
    };
    struct LaterEntry {
        bool operator()(const ReadyEntry& a, const ReadyEntry& b) const {
            if (a.at != b.at)
                return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    TaskRec& cur() { return *current().rec; }

    TaskRec& task(TaskId id) {
        auto it = tasks_.find(id);
        if (it == tasks_.end())
            throw ContractViolation("unknown task " + std::to_string(id));
        return *it->second;
    }

    // Stamp for actions triggered from a running body (its cursor) or from
    // an event handler (the event's time).
    Time stamp_now() {
        TaskRec* r = current().rec;
        return r ? r->cursor : tl_.now();
    }

    void make_ready(TaskId id, Time at, Provenance prov) {
        deps_.mark_ready(id);
        TaskRec* creator = current().rec;
        log_.append({at, creator ? creator->worker : kNoWorker, id, Transition::ready, prov, {}});
        ready_.push(ReadyEntry{at, ready_seq_++, id});
        tl_.schedule(at, EventClass::scheduling, [this] { dispatch_round(); });
    }

    void dispatch_round() {
        while (!ready_.empty() && ready_.top().at <= tl_.now()) {
            int w = idle_worker();
            if (w == kNoWorker)
                return;
            TaskId id = ready_.top().id;
            ready_.pop();
            start_segment(w, id);
        }
    }

    int idle_worker() const {
        for (unsigned w = 0; w < cfg_.workers; ++w)
            if (worker_task_[w] == kNoTask)
                return static_cast<int>(w);
        return kNoWorker;
    }

    void start_segment(int w, TaskId id) {
        TaskRec& r = task(id);
        r.worker = w;
        r.last_worker = w;
        worker_task_[w] = id;
        ++busy_running_;
        deps_.mark_running(id);
        r.cursor = tl_.now();
        log_.append({r.cursor, w, id, Transition::running, Provenance::dispatch, {}});
        if (!r.fiber)
            r.fiber = std::make_unique<Fiber>(
                [this, &r] {
                    r.def.body();
                    if (r.def.cost > 0)
                        r.cursor += r.def.cost;
                },
                cfg_.fiber_stack_bytes);
        run_fiber(r);
    }

    void run_fiber(TaskRec& r) {
        Current& c = current();
        Current prev = c;
        c = Current{this, &r};
        r.fiber->resume();
        c = prev;
        handle_park(r);
    }

    // The fiber returned control at its cursor; everything that happens to
    // the worker next is an event at that instant.
    void handle_park(TaskRec& r) {
        TaskId id = r.id;
        if (r.fiber->done()) {
            tl_.schedule(r.cursor, EventClass::scheduling, [this, id] { finish_segment(id); });
            return;
        }
        switch (r.park) {
        case ParkKind::yielded:
            tl_.schedule(r.cursor, EventClass::scheduling, [this, id] { park_yield(id); });
            return;
        case ParkKind::token:
            tl_.schedule(r.cursor, EventClass::scheduling, [this, id] { park_suspend(id); });
            return;
        case ParkKind::timer:
            tl_.schedule(r.cursor, EventClass::scheduling, [this, id] { park_timer(id); });
            return;
        case ParkKind::blocked:
            // Worker stays occupied: log now, continue the segment when the
            // awaited completion instant arrives.
            log_.append({r.cursor, r.worker, id, Transition::blocked, Provenance::self_block, {}});
            --busy_running_;
            if (r.block_until != kBlockPending)
                tl_.schedule(r.block_until, EventClass::unblock, [this, id] { unblock(id); });
            return;
        case ParkKind::none:
            throw ContractViolation("fiber parked without a reason");
        }
    }

    void free_worker(TaskRec& r) {
        worker_task_[r.worker] = kNoTask;
        r.worker = kNoWorker;
        --busy_running_;
    }

    void finish_segment(TaskId id) {
        TaskRec& r = task(id);
        int w = r.worker;
        log_.append({tl_.now(), w, id, Transition::body_finished, Provenance::self_finish, {}});
        free_worker(r);
        r.fiber.reset();
        deps::ReleaseOutcome out = deps_.notify_body_finished(id);
        if (out.released)
            finalize_finish(id, out, Provenance::self_finish, w);
        dispatch_round();
    }

    void park_yield(TaskId id) {
        TaskRec& r = task(id);
        int w = r.worker;
        log_.append({tl_.now(), w, id, Transition::yielded, Provenance::self_yield, {}});
        free_worker(r);
        deps_.mark_ready(id);
        log_.append({tl_.now(), w, id, Transition::ready, Provenance::self_yield, {}});
        ready_.push(ReadyEntry{tl_.now(), ready_seq_++, id});
        dispatch_round();
    }

    void park_suspend(TaskId id) {
        TaskRec& r = task(id);
        log_.append({tl_.now(), r.worker, id, Transition::suspended, Provenance::self_suspend, {}});
        free_worker(r);
        deps_.mark_suspended(id);
        std::shared_ptr<TokenState> st = r.park_token;
        bool fire_now = false;
        Provenance prov = Provenance::external_resume;
        Time fire_at = tl_.now();
        {
            std::lock_guard lk(st->mu);
            if (st->s == TokenState::S::fired) {
                st->s = TokenState::S::consumed;
                fire_now = true;
                prov = st->fire_prov;
                fire_at = std::max(fire_at, st->fire_at);
            } else {
                st->s = TokenState::S::parked;
            }
        }
        if (fire_now)
            make_ready(id, fire_at, prov);
        dispatch_round();
    }

    void park_timer(TaskId id) {
        TaskRec& r = task(id);
        log_.append({tl_.now(), r.worker, id, Transition::suspended, Provenance::self_suspend, {}});
        free_worker(r);
        deps_.mark_suspended(id);
        if (stopping_ && r.def.service) {
            make_ready(id, tl_.now(), Provenance::timer);
        } else {
            r.timer_armed = true;
            tl_.schedule(r.timer_until, EventClass::scheduling, [this, id] { timer_fire(id); });
        }
        dispatch_round();
    }

    void timer_fire(TaskId id) {
        TaskRec& r = task(id);
        if (!r.timer_armed)
            return; // woken early (service stop)
        r.timer_armed = false;
        make_ready(id, tl_.now(), Provenance::timer);
    }

    void unblock(TaskId id) {
        TaskRec& r = task(id);
        log_.append(
            {tl_.now(), r.worker, id, Transition::unblocked, Provenance::device_complete, {}});
        ++busy_running_;
        r.cursor = tl_.now();
        run_fiber(r);
    }

    void fire_token(const std::shared_ptr<TokenState>& st, Provenance prov) {
        bool requeue = false;
        {
            std::lock_guard lk(st->mu);
            switch (st->s) {
            case TokenState::S::armed:
                st->s = TokenState::S::fired;
                st->fire_prov = prov;
                st->fire_at = stamp_now();
                break;
            case TokenState::S::parked:
                st->s = TokenState::S::consumed;
                requeue = true;
                break;
            case TokenState::S::fired:
            case TokenState::S::consumed:
                throw ContractViolation("resume permit fired twice");
            }
        }
        if (requeue)
            make_ready(st->task, stamp_now(), prov);
    }

    // Shared by the immediate path (body finished with a drained counter)
    // and the deferred path (counter drained later via polling).
    void finalize_finish(TaskId id, const deps::ReleaseOutcome& out, Provenance prov,
                         int worker) {
        Time at = stamp_now();
        log_.append({at, worker, id, Transition::finished, prov, {}});
        TaskRec& r = task(id);
        --live_total_;
        if (!r.def.service)
            --live_nonservice_;
        for (TaskId s : out.newly_ready)
            make_ready(s, at, Provenance::dep_release);
        if (out.parent_to_wake) {
            TaskRec& p = task(*out.parent_to_wake);
            if (!p.wait_token)
                throw ContractViolation("children drained with no armed taskwait");
            fire_token(p.wait_token, Provenance::taskwait_wake);
        }
        if (live_nonservice_ == 0 && !stopping_)
            stop_services();
    }

public:
    // Deferred release completion, driven by the polling layer after it
    // drained the task's pending-op counter.
    void complete_deferred(TaskId id, const deps::ReleaseOutcome& out) override {
        TaskRec* poller = current().rec;
        finalize_finish(id, out, Provenance::poll_release,
                        poller ? poller->worker : kNoWorker);
    }

    void unblock_at(TaskId id, Time t) override {
        TaskRec& r = task(id);
        if (r.park != ParkKind::blocked || r.block_until != kBlockPending)
            throw ContractViolation("unblock_at for a task not blocked pending");
        r.block_until = t;
        tl_.schedule(t, EventClass::unblock, [this, id] { unblock(id); });
    }

private:
    static constexpr Time kBlockPending = -1;

    void stop_services() {
        stopping_ = true;
        std::vector<TaskId> sleepers;
        for (auto& [id, rec] : tasks_)
            if (rec->def.service && rec->timer_armed)
                sleepers.push_back(id);
        std::sort(sleepers.begin(), sleepers.end());
        for (TaskId id : sleepers) {
            task(id).timer_armed = false;
            make_ready(id, tl_.now(), Provenance::timer);
        }
    }

    std::string stuck_diagnostic() const {
        std::vector<std::pair<TaskId, std::string>> stuck;
        for (const auto& [id, rec] : tasks_) {
            TaskState s = deps_.state(id);
            if (s != TaskState::finished)
                stuck.emplace_back(id, std::string(to_string(s)) + " pending_ops=" +
                                           std::to_string(deps_.pending_ops(id)));
        }
        std::sort(stuck.begin(), stuck.end());
        std::ostringstream os;
        os << stuck.size() << " task(s) stuck:";
        std::size_t shown = 0;
        for (auto& [id, what] : stuck) {
            if (++shown > 8) {
                os << " ...";
                break;
            }
            os << " [" << id << " " << deps_.label(id) << ": " << what << "]";
        }
        return os.str();
    }

    Timeline tl_;
    std::priority_queue<ReadyEntry, std::vector<ReadyEntry>, LaterEntry> ready_;
    std::uint64_t ready_seq_ = 0;
    std::vector<TaskId> worker_task_;
    unsigned busy_running_ = 0;
    std::unordered_map<TaskId, std::unique_ptr<TaskRec>> tasks_;
    TaskId next_id_ = 0;
    std::size_t live_total_ = 0;
    std::size_t live_nonservice_ = 0;
    bool stopping_ = false;
    bool in_run_ = false;
};

std::unique_ptr<Substrate> make_virtual_substrate(SubstrateConfig cfg,
                                                  deps::DependencySystem& deps, RunLog& log) {
    return std::make_unique<VirtualSubstrate>(cfg, deps, log);
}

} // namespace tw::detail
