#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <thread>

#include "substrate_impl.hpp"

namespace tw::detail {

namespace {
using SteadyClock = std::chrono::steady_clock;
}

// OS-thread engine: one worker thread per configured worker, a shared
// mutex-protected FIFO ready queue, a timer thread for sleeps. Task bodies
// still run as fibers so a suspended task frees its worker and may resume on
// a different one. Nothing here is deterministic; the virtual engine is the
// reference behavior.
class ThreadedSubstrate final : public SubstrateBase {
public:
    ThreadedSubstrate(SubstrateConfig cfg, deps::DependencySystem& deps, RunLog& log)
        : SubstrateBase(cfg, deps, log), worker_task_(cfg.workers, kNoTask),
          t0_(SteadyClock::now()) {
        for (unsigned w = 0; w < cfg_.workers; ++w)
            threads_.emplace_back([this, w] { worker_loop(static_cast<int>(w)); });
        timer_thread_ = std::thread([this] { timer_loop(); });
    }

    ~ThreadedSubstrate() override {
        {
            std::lock_guard lk(mu_);
            shutdown_ = true;
        }
        cv_ready_.notify_all();
        {
            std::lock_guard lk(timer_mu_);
            timer_shutdown_ = true;
        }
        cv_timer_.notify_all();
        for (std::thread& t : threads_)
            t.join();
        timer_thread_.join();
    }

    TaskId spawn(InstanceId instance, TaskDef def) override {
        validate(def);
        inst(instance);
        TaskRec* creator = current().rec;
        std::optional<TaskId> parent = creator && !def.detached
                                           ? std::optional<TaskId>(creator->id)
                                           : std::nullopt;

        TaskId id;
        bool service = def.service;
        std::string label = def.label;
        std::vector<TaskId> preds;
        {
            std::lock_guard lk(mu_);
            id = next_id_++;
            preds = deps_.register_task(id, def.accesses, parent, def.label, def.internal);
            auto rec = std::make_unique<TaskRec>();
            rec->id = id;
            rec->instance = instance;
            rec->def = std::move(def);
            tasks_.emplace(id, std::move(rec));
            ++live_total_;
            if (!service)
                ++live_nonservice_;
        }
        count_submit(instance);
        log_.append({now(), creator ? creator->worker : kNoWorker, id, Transition::created,
                     Provenance::none, std::move(label)});
        if (preds.empty())
            make_ready(id, Provenance::submit);
        return id;
    }

    void run() override {
        if (current().rec)
            throw ContractViolation("run() called from inside a task");
        std::unique_lock lk(mu_);
        stopping_.store(false);
        if (live_nonservice_ == 0)
            stop_services_locked();
        cv_idle_.wait(lk, [this] {
            if (live_nonservice_ == 0 && !stopping_.load())
                stop_services_locked();
            return live_total_ == 0;
        });
    }

    void resume(const SuspendToken& token, Provenance prov) override {
        if (!token.valid())
            throw ContractViolation("resume of an empty token");
        fire_token(TokenAccess::state(token), prov);
    }

    void complete_deferred(TaskId id, const deps::ReleaseOutcome& out) override {
        TaskRec* poller = current().rec;
        finalize_finish(id, out, Provenance::poll_release,
                        poller ? poller->worker : kNoWorker);
    }

    void unblock_at(TaskId, Time) override {
        throw ContractViolation("scheduled unblock under real threads");
    }

    Time now() const override {
        return std::chrono::duration<double>(SteadyClock::now() - t0_).count();
    }
    bool stop_requested() const override { return stopping_.load(); }
    unsigned running_worker_count() const override { return busy_running_.load(); }
    Timeline* timeline() override { return nullptr; }

protected:
    void op_advance(double cost) override {
        if (cost < 0)
            throw ContractViolation("advance with negative cost");
        auto until = SteadyClock::now() +
                     std::chrono::duration<double>(cost * cfg_.real_seconds_per_unit);
        while (SteadyClock::now() < until)
            ; // burn the core: modeled compute is real contention here
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
                TokenAccess::state(token)->s = TokenState::S::consumed;
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
        if (stopping_.load() && r.def.service)
            return;
        r.timer_until = now() + duration * cfg_.real_seconds_per_unit;
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

    void op_mark(std::string note) override { log_.mark(now(), cur().worker, std::move(note)); }

    void op_block_until(Time) override {
        throw ContractViolation("virtual-clock blocking wait under real threads");
    }

    void op_block_pending() override {
        throw ContractViolation("virtual-clock blocking wait under real threads");
    }

    void op_block_on(const std::function<void()>& wait) override {
        TaskRec& r = cur();
        log_.append({now(), r.worker, r.id, Transition::blocked, Provenance::self_block, {}});
        busy_running_.fetch_sub(1);
        wait();
        busy_running_.fetch_add(1);
        log_.append(
            {now(), r.worker, r.id, Transition::unblocked, Provenance::device_complete, {}});
    }

    Time op_task_now() override { return now(); }

private:
    TaskRec& cur() { return *current().rec; }

    TaskRec* find_task(TaskId id) {
        std::lock_guard lk(mu_);
        auto it = tasks_.find(id);
        return it == tasks_.end() ? nullptr : it->second.get();
    }

    void make_ready(TaskId id, Provenance prov) {
        deps_.mark_ready(id);
        TaskRec* creator = current().rec;
        log_.append(
            {now(), creator ? creator->worker : kNoWorker, id, Transition::ready, prov, {}});
        {
            std::lock_guard lk(mu_);
            ready_.push_back(id);
        }
        cv_ready_.notify_one();
    }

    void worker_loop(int w) {
        for (;;) {
            TaskId id;
            {
                std::unique_lock lk(mu_);
                cv_ready_.wait(lk, [this] { return shutdown_ || !ready_.empty(); });
                if (shutdown_ && ready_.empty())
                    return;
                if (ready_.empty())
                    continue;
                id = ready_.front();
                ready_.pop_front();
                worker_task_[w] = id;
            }
            run_one(w, id);
        }
    }

    void run_one(int w, TaskId id) {
        TaskRec& r = *find_task(id);
        r.worker = w;
        r.last_worker = w;
        deps_.mark_running(id);
        log_.append({now(), w, id, Transition::running, Provenance::dispatch, {}});
        if (!r.fiber)
            r.fiber = std::make_unique<Fiber>(
                [this, &r] {
                    r.def.body();
                    if (r.def.cost > 0)
                        op_advance(r.def.cost);
                },
                cfg_.fiber_stack_bytes);

        busy_running_.fetch_add(1);
        Current& c = current();
        c = Current{this, &r};
        r.fiber->resume();
        c = Current{};
        busy_running_.fetch_sub(1);
        handle_park(w, r);
    }

    void release_worker(int w, TaskRec& r) {
        std::lock_guard lk(mu_);
        worker_task_[w] = kNoTask;
        r.worker = kNoWorker;
    }

    void handle_park(int w, TaskRec& r) {
        TaskId id = r.id;
        if (r.fiber->done()) {
            log_.append({now(), w, id, Transition::body_finished, Provenance::self_finish, {}});
            release_worker(w, r);
            r.fiber.reset();
            deps::ReleaseOutcome out = deps_.notify_body_finished(id);
            if (out.released)
                finalize_finish(id, out, Provenance::self_finish, w);
            return;
        }
        switch (r.park) {
        case ParkKind::yielded:
            log_.append({now(), w, id, Transition::yielded, Provenance::self_yield, {}});
            release_worker(w, r);
            deps_.mark_ready(id);
            log_.append({now(), w, id, Transition::ready, Provenance::self_yield, {}});
            {
                std::lock_guard lk(mu_);
                ready_.push_back(id);
            }
            cv_ready_.notify_one();
            return;
        case ParkKind::token: {
            log_.append({now(), w, id, Transition::suspended, Provenance::self_suspend, {}});
            release_worker(w, r);
            deps_.mark_suspended(id);
            std::shared_ptr<TokenState> st = r.park_token;
            bool fire_now = false;
            Provenance prov = Provenance::external_resume;
            {
                std::lock_guard lk(st->mu);
                if (st->s == TokenState::S::fired) {
                    st->s = TokenState::S::consumed;
                    fire_now = true;
                    prov = st->fire_prov;
                } else {
                    st->s = TokenState::S::parked;
                }
            }
            if (fire_now)
                make_ready(id, prov);
            return;
        }
        case ParkKind::timer: {
            log_.append({now(), w, id, Transition::suspended, Provenance::self_suspend, {}});
            release_worker(w, r);
            deps_.mark_suspended(id);
            bool stop_now = stopping_.load() && r.def.service;
            if (stop_now) {
                make_ready(id, Provenance::timer);
            } else {
                {
                    std::lock_guard lk(timer_mu_);
                    r.timer_armed = true;
                    timers_.emplace(r.timer_until, &r);
                }
                cv_timer_.notify_one();
            }
            return;
        }
        default:
            throw ContractViolation("fiber parked without a reason");
        }
    }

    void fire_token(const std::shared_ptr<TokenState>& st, Provenance prov) {
        bool requeue = false;
        {
            std::lock_guard lk(st->mu);
            switch (st->s) {
            case TokenState::S::armed:
                st->s = TokenState::S::fired;
                st->fire_prov = prov;
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
            make_ready(st->task, prov);
    }

    void finalize_finish(TaskId id, const deps::ReleaseOutcome& out, Provenance prov,
                         int worker) {
        log_.append({now(), worker, id, Transition::finished, prov, {}});
        std::shared_ptr<TokenState> wake;
        {
            std::lock_guard lk(mu_);
            TaskRec& r = *tasks_.at(id);
            --live_total_;
            if (!r.def.service)
                --live_nonservice_;
            if (out.parent_to_wake) {
                TaskRec& p = *tasks_.at(*out.parent_to_wake);
                if (!p.wait_token)
                    throw ContractViolation("children drained with no armed taskwait");
                wake = p.wait_token;
            }
            if (live_nonservice_ == 0 && !stopping_.load())
                stop_services_locked();
        }
        for (TaskId s : out.newly_ready)
            make_ready(s, Provenance::dep_release);
        if (wake)
            fire_token(wake, Provenance::taskwait_wake);
        cv_idle_.notify_all();
    }

    // Requires mu_.
    void stop_services_locked() {
        stopping_.store(true);
        std::vector<TaskId> sleepers;
        {
            std::lock_guard lk(timer_mu_);
            for (auto it = timers_.begin(); it != timers_.end();) {
                TaskRec& r = *it->second;
                if (r.def.service) {
                    r.timer_armed = false;
                    sleepers.push_back(r.id);
                    it = timers_.erase(it);
                } else {
                    ++it;
                }
            }
        }
        for (TaskId id : sleepers) {
            deps_.mark_ready(id);
            log_.append({now(), kNoWorker, id, Transition::ready, Provenance::timer, {}});
            ready_.push_back(id); // mu_ already held
        }
        if (!sleepers.empty())
            cv_ready_.notify_all();
    }

    void timer_loop() {
        std::unique_lock lk(timer_mu_);
        for (;;) {
            if (timer_shutdown_)
                return;
            if (timers_.empty()) {
                cv_timer_.wait(lk);
                continue;
            }
            double next = timers_.begin()->first;
            double wait_s = next - now();
            if (wait_s > 0) {
                cv_timer_.wait_for(lk, std::chrono::duration<double>(wait_s));
                continue;
            }
            TaskRec* r = timers_.begin()->second;
            timers_.erase(timers_.begin());
            r->timer_armed = false;
            TaskId id = r->id;
            lk.unlock();
            make_ready(id, Provenance::timer);
            lk.lock();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_ready_;
    std::condition_variable cv_idle_;
    std::deque<TaskId> ready_;
    std::vector<std::thread> threads_;
    std::vector<TaskId> worker_task_;
    std::atomic<unsigned> busy_running_{0};
    std::unordered_map<TaskId, std::unique_ptr<TaskRec>> tasks_;
    TaskId next_id_ = 0;
    std::size_t live_total_ = 0;
    std::size_t live_nonservice_ = 0;
    std::atomic<bool> stopping_{false};
    bool shutdown_ = false;
    SteadyClock::time_point t0_;

    std::thread timer_thread_;
    std::mutex timer_mu_;
    std::condition_variable cv_timer_;
    std::multimap<double, TaskRec*> timers_;
    bool timer_shutdown_ = false;
};

std::unique_ptr<Substrate> make_threaded_substrate(SubstrateConfig cfg,
                                                   deps::DependencySystem& deps, RunLog& log) {
    return std::make_unique<ThreadedSubstrate>(cfg, deps, log);
}

} // namespace tw::detail
