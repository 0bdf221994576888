#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "taskweave/substrate.hpp"
#include "taskweave/types.hpp"

namespace tw::pool {

struct ContentionConfig {
    unsigned cores = 1;
    double penalty = 0.2; // context-switch tax per scheduling quantum
    double quantum = 1.0; // quantum length, model units
};

// Counts scheduling entities competing for the cores and prices the
// slowdown: with N competitors on C cores, work stretches by N/C and pays
// the switch tax on top. One instance is shared by every pool in a scenario
// so uncoordinated pools see each other.
class CoreContention {
public:
    CoreContention(Substrate& sub, ContentionConfig cfg) : sub_(sub), cfg_(cfg) {
        if (cfg.cores == 0)
            throw ConfigError("contention model needs at least one core");
    }

    void add_threads(unsigned n) { pool_threads_ += n; }
    void remove_threads(unsigned n) { pool_threads_ -= n; }

    unsigned competing() const { return pool_threads_ + sub_.running_worker_count(); }

    double factor() const {
        unsigned n = competing();
        if (n <= cfg_.cores)
            return 1.0;
        return (static_cast<double>(n) / cfg_.cores) * (1.0 + cfg_.penalty / cfg_.quantum);
    }

    const ContentionConfig& config() const { return cfg_; }

private:
    Substrate& sub_;
    ContentionConfig cfg_;
    unsigned pool_threads_ = 0;
};

// A conventional fork-join worker pool, the kind every self-contained
// library brings along. Callers hand over one item and block their worker
// until it completes. Under the virtual clock the pool is simulated: fixed
// thread count, FIFO queue, per-item duration scaled by the contention
// factor sampled at entry. Under real threads it is an actual pool and the
// slowdown comes from the OS scheduler instead.
class LegacyPool {
public:
    LegacyPool(Substrate& sub, CoreContention& model, unsigned threads, std::string name);
    ~LegacyPool();

    LegacyPool(const LegacyPool&) = delete;
    LegacyPool& operator=(const LegacyPool&) = delete;

    // Runs fn (may be empty) with modeled duration cost on a pool thread;
    // the calling task's worker stays occupied for the whole round trip.
    void run_blocking(double cost, std::function<void()> fn = {});

    unsigned threads() const { return threads_; }
    std::size_t items_completed() const;
    // Entry-to-start waiting accumulated across items, model units.
    double total_queue_delay() const;

private:
    struct Item {
        TaskId caller = kNoTask;
        Time submit = 0;
        double cost = 0;
        std::function<void()> fn;
    };

    void enter_virtual(Item item);
    void real_worker_loop();

    Substrate& sub_;
    CoreContention& model_;
    unsigned threads_;
    std::string name_;
    bool virtual_clock_;

    // Virtual clock: per-thread availability instants.
    std::vector<Time> avail_;
    std::size_t completed_ = 0;
    double queue_delay_ = 0;

    // Real threads.
    struct RealItem {
        std::function<void()> fn;
        double cost = 0;
        bool done = false;
        std::mutex mu;
        std::condition_variable cv;
    };
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::shared_ptr<RealItem>> queue_;
    std::vector<std::thread> real_threads_;
    bool shutdown_ = false;
};

} // namespace tw::pool
