#include "taskweave/legacy_pool.hpp"

#include <algorithm>
#include <chrono>

#include "taskweave/timeline.hpp"

namespace tw::pool {

LegacyPool::LegacyPool(Substrate& sub, CoreContention& model, unsigned threads,
                       std::string name)
    : sub_(sub), model_(model), threads_(threads), name_(std::move(name)),
      virtual_clock_(sub.timeline() != nullptr) {
    if (threads == 0)
        throw ConfigError("pool '" + name_ + "' needs at least one thread");
    model_.add_threads(threads_);
    if (virtual_clock_) {
        avail_.assign(threads_, 0.0);
    } else {
        for (unsigned i = 0; i < threads_; ++i)
            real_threads_.emplace_back([this] { real_worker_loop(); });
    }
}

LegacyPool::~LegacyPool() {
    model_.remove_threads(threads_);
    if (!real_threads_.empty()) {
        {
            std::lock_guard lk(mu_);
            shutdown_ = true;
        }
        cv_.notify_all();
        for (std::thread& t : real_threads_)
            t.join();
    }
}

void LegacyPool::run_blocking(double cost, std::function<void()> fn) {
    if (cost < 0)
        throw ContractViolation("pool item with negative cost");
    if (!this_task::in_task())
        throw ContractViolation("pool '" + name_ + "' called from outside a task");

    if (virtual_clock_) {
        Item item{this_task::id(), this_task::now(), cost, std::move(fn)};
        // Entry is a timeline event so items from different workers queue in
        // submission-time order, not body-execution order.
        sub_.timeline()->schedule(item.submit, EventClass::device_completion,
                                  [this, item = std::move(item)]() mutable {
                                      enter_virtual(std::move(item));
                                  });
        this_task::block_pending();
        return;
    }

    auto item = std::make_shared<RealItem>();
    item->fn = std::move(fn);
    item->cost = cost;
    {
        std::lock_guard lk(mu_);
        queue_.push_back(item);
    }
    cv_.notify_one();
    this_task::block_on([item] {
        std::unique_lock lk(item->mu);
        item->cv.wait(lk, [&] { return item->done; });
    });
}

void LegacyPool::enter_virtual(Item item) {
    Timeline& tl = *sub_.timeline();
    auto slot = std::min_element(avail_.begin(), avail_.end());
    Time start = std::max(tl.now(), *slot);
    double factor = model_.factor();
    Time completion = start + item.cost * factor;
    *slot = completion;
    queue_delay_ += start - item.submit;

    TaskId caller = item.caller;
    if (item.fn) {
        tl.schedule(completion, EventClass::device_completion,
                    [fn = std::move(item.fn)] { fn(); });
    }
    tl.schedule(completion, EventClass::device_completion, [this] { ++completed_; });
    sub_.unblock_at(caller, completion);
}

std::size_t LegacyPool::items_completed() const {
    if (virtual_clock_)
        return completed_;
    std::lock_guard lk(mu_);
    return completed_;
}

double LegacyPool::total_queue_delay() const { return queue_delay_; }

void LegacyPool::real_worker_loop() {
    double spu = sub_.config().real_seconds_per_unit;
    for (;;) {
        std::shared_ptr<RealItem> item;
        {
            std::unique_lock lk(mu_);
            cv_.wait(lk, [this] { return shutdown_ || !queue_.empty(); });
            if (shutdown_ && queue_.empty())
                return;
            item = queue_.front();
            queue_.pop_front();
        }
        if (item->fn)
            item->fn();
        auto until = std::chrono::steady_clock::now() +
                     std::chrono::duration<double>(item->cost * spu);
        while (std::chrono::steady_clock::now() < until)
            ;
        {
            std::lock_guard lk(mu_);
            ++completed_;
        }
        {
            std::lock_guard lk(item->mu);
            item->done = true;
        }
        item->cv.notify_all();
    }
}

} // namespace tw::pool
