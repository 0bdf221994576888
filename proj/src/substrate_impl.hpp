#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "taskweave/dep_system.hpp"
#include "taskweave/fiber.hpp"
#include "taskweave/substrate.hpp"

namespace tw::detail {

enum class ParkKind : std::uint8_t {
    none,      // running or never dispatched
    token,     // waiting on a SuspendToken
    timer,     // sleeping until timer_until
    blocked,   // blocking device wait, worker kept (virtual clock only)
    yielded,   // voluntary requeue
};

struct TokenState {
    enum class S : std::uint8_t { armed, fired, parked, consumed };
    std::mutex mu;
    S s = S::armed;
    TaskId task = kNoTask;
    Provenance fire_prov = Provenance::external_resume;
    // Virtual instant the permit was fired at; a fire that lands before the
    // park must not let the owner resume earlier than this.
    Time fire_at = 0;
};

struct TaskRec {
    TaskId id = kNoTask;
    InstanceId instance = 0;
    TaskDef def;
    std::unique_ptr<Fiber> fiber;
    double cursor = 0;
    int worker = kNoWorker;
    int last_worker = kNoWorker;
    ParkKind park = ParkKind::none;
    std::shared_ptr<TokenState> park_token;
    Time block_until = 0;
    Time timer_until = 0;
    bool timer_armed = false;
    std::shared_ptr<TokenState> wait_token; // armed across taskwait
};

// Thread-local identity of the running task; set around every fiber switch.
struct Current {
    Substrate* engine = nullptr;
    TaskRec* rec = nullptr;
};
Current& current();

class SubstrateBase : public Substrate {
public:
    SubstrateBase(SubstrateConfig cfg, deps::DependencySystem& deps, RunLog& log)
        : cfg_(cfg), deps_(deps), log_(log) {}

    InstanceId register_instance(std::string name) override {
        std::lock_guard lk(inst_mu_);
        instances_.push_back(Inst{std::move(name), 0});
        return static_cast<InstanceId>(instances_.size() - 1);
    }

    std::size_t submitted_count(InstanceId i) const override {
        std::lock_guard lk(inst_mu_);
        return inst(i).submitted;
    }

    unsigned worker_count() const override { return cfg_.workers; }
    const SubstrateConfig& config() const override { return cfg_; }

protected:
    struct Inst {
        std::string name;
        std::size_t submitted;
    };

    const Inst& inst(InstanceId i) const {
        if (i >= instances_.size())
            throw ContractViolation("unknown runtime instance " + std::to_string(i));
        return instances_[i];
    }

    void count_submit(InstanceId i) {
        std::lock_guard lk(inst_mu_);
        if (i >= instances_.size())
            throw ContractViolation("unknown runtime instance " + std::to_string(i));
        instances_[i].submitted++;
    }

    static void validate(const TaskDef& def) {
        if (!def.body)
            throw ContractViolation("task without a body");
        if (def.cost < 0)
            throw ContractViolation("negative task cost");
    }

    SubstrateConfig cfg_;
    deps::DependencySystem& deps_;
    RunLog& log_;
    mutable std::mutex inst_mu_;
    std::vector<Inst> instances_;
};

std::unique_ptr<Substrate> make_virtual_substrate(SubstrateConfig, deps::DependencySystem&,
                                                  RunLog&);
std::unique_ptr<Substrate> make_threaded_substrate(SubstrateConfig, deps::DependencySystem&,
                                                   RunLog&);

// Engine-side door into the opaque public token.
struct TokenAccess {
    static SuspendToken wrap(std::shared_ptr<TokenState> st) {
        return SuspendToken(std::move(st));
    }
    static const std::shared_ptr<TokenState>& state(const SuspendToken& t) { return t.st_; }
};

} // namespace tw::detail

namespace tw {

// Bridges this_task:: free functions to the protected engine hooks.
struct CurrentTaskAccess {
    static Substrate& engine();
    static detail::TaskRec& rec();
    static void advance(double c) { engine().op_advance(c); }
    static void yield() { engine().op_yield(); }
    static SuspendToken prepare() { return engine().op_prepare_suspend(); }
    static void suspend(const SuspendToken& t) { engine().op_suspend(t); }
    static void sleep_for(double d) { engine().op_sleep_for(d); }
    static void taskwait() { engine().op_taskwait(); }
    static void mark(std::string n) { engine().op_mark(std::move(n)); }
    static void block_until(Time t) { engine().op_block_until(t); }
    static void block_pending() { engine().op_block_pending(); }
    static void block_on(const std::function<void()>& w) { engine().op_block_on(w); }
    static Time task_now() { return engine().op_task_now(); }
};

} // namespace tw
