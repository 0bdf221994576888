#include "taskweave/sim_device.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>

#include "taskweave/timeline.hpp"

namespace tw::sim {

std::uint64_t fnv1a(const std::byte* data, std::size_t n) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(data[i]));
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t MemoryArena::allocate(std::size_t bytes, std::size_t align) {
    std::size_t at = (used_ + align - 1) / align * align;
    if (at + bytes > buf_.size())
        throw ConfigError("device arena exhausted: need " + std::to_string(at + bytes) +
                          " bytes, have " + std::to_string(buf_.size()));
    used_ = at + bytes;
    return at;
}

void MemoryArena::check_range(std::uint64_t offset, std::size_t bytes,
                              std::size_t align) const {
    if (offset % align != 0)
        throw ContractViolation("arena view misaligned at offset " + std::to_string(offset));
    if (offset + bytes > buf_.size())
        throw ContractViolation("arena view past end: offset " + std::to_string(offset) +
                                " + " + std::to_string(bytes) + " bytes");
}

namespace {
struct PendingOrder {
    bool operator()(const std::pair<Time, OpId>& a, const std::pair<Time, OpId>& b) const {
        return a > b; // min-heap
    }
};
} // namespace

Device::Device(Substrate& sub, DeviceConfig cfg)
    : sub_(sub), cfg_(cfg), arena_(cfg.arena_bytes),
      virtual_clock_(sub.timeline() != nullptr),
      unit_scale_(virtual_clock_ ? 1.0 : sub.config().real_seconds_per_unit) {
    if (!virtual_clock_)
        worker_ = std::thread([this] { device_thread(); });
}

Device::~Device() {
    if (worker_.joinable()) {
        {
            std::lock_guard lk(mu_);
            shutdown_ = true;
        }
        cv_.notify_all();
        worker_.join();
    }
}

int Device::register_kernel(std::string name, KernelFn fn) {
    if (!fn)
        throw ContractViolation("kernel '" + name + "' registered with no body");
    std::lock_guard lk(mu_);
    for (const std::string& n : kernel_names_)
        if (n == name)
            throw ContractViolation("kernel '" + name + "' registered twice");
    kernel_names_.push_back(std::move(name));
    kernel_fns_.push_back(std::move(fn));
    return static_cast<int>(kernel_names_.size()) - 1;
}

StreamId Device::create_stream() {
    std::lock_guard lk(mu_);
    stream_tails_.push_back(0);
    return static_cast<StreamId>(stream_tails_.size()) - 1;
}

Time Device::observer_now() const {
    return this_task::in_task() ? this_task::now() : sub_.now();
}

OpId Device::enqueue_locked(Op op, double duration) {
    if (op.stream < 0 || static_cast<std::size_t>(op.stream) >= stream_tails_.size())
        throw ContractViolation("enqueue on unknown stream " + std::to_string(op.stream));
    op.id = ops_.empty() ? 0 : ops_.rbegin()->first + 1;
    op.enqueue = observer_now();
    Time& tail = stream_tails_[static_cast<std::size_t>(op.stream)];
    op.start = std::max(op.enqueue, tail) + cfg_.launch_overhead * unit_scale_;
    op.completion = op.start + duration * unit_scale_;
    tail = op.completion;
    pending_.emplace_back(op.completion, op.id);
    std::push_heap(pending_.begin(), pending_.end(), PendingOrder{});
    OpId id = op.id;
    Time completion = op.completion;
    ops_.emplace(id, std::move(op));

    if (virtual_clock_) {
        Timeline& tl = *sub_.timeline();
        tl.schedule(completion, EventClass::device_completion,
                    [this, completion] { process_completions_until(completion); });
    } else {
        cv_.notify_all();
    }
    return id;
}

OpId Device::enqueue_kernel(StreamId stream, int kernel, KernelArgs args, double cost) {
    if (cost < 0)
        throw ContractViolation("kernel enqueued with negative cost");
    std::lock_guard lk(mu_);
    if (kernel < 0 || static_cast<std::size_t>(kernel) >= kernel_fns_.size())
        throw ContractViolation("launch of unregistered kernel id " + std::to_string(kernel));
    Op op;
    op.stream = stream;
    op.kernel = kernel;
    op.args = std::move(args);
    return enqueue_locked(std::move(op), cost);
}

OpId Device::enqueue_copy(StreamId stream, std::uint64_t dst, std::uint64_t src,
                          std::uint64_t bytes) {
    std::lock_guard lk(mu_);
    if (dst + bytes > arena_.capacity() || src + bytes > arena_.capacity())
        throw ContractViolation("copy outside the arena");
    Op op;
    op.stream = stream;
    op.copy_dst = dst;
    op.copy_src = src;
    op.copy_bytes = bytes;
    return enqueue_locked(std::move(op),
                          cfg_.copy_base_cost +
                              static_cast<double>(bytes) * cfg_.copy_cost_per_byte);
}

EventId Device::record_event(StreamId stream) {
    std::lock_guard lk(mu_);
    if (stream < 0 || static_cast<std::size_t>(stream) >= stream_tails_.size())
        throw ContractViolation("event on unknown stream " + std::to_string(stream));
    Time at = std::max(stream_tails_[static_cast<std::size_t>(stream)], observer_now());
    events_.emplace_back(stream, at);
    return events_.size() - 1;
}

Time Device::event_time(EventId ev) const {
    std::lock_guard lk(mu_);
    if (ev >= events_.size())
        throw ContractViolation("unknown event " + std::to_string(ev));
    return events_[ev].second;
}

void Device::apply_locked(Op& op) {
    CompletionRecord rec;
    rec.op = op.id;
    rec.stream = op.stream;
    rec.enqueue = op.enqueue;
    rec.start = op.start;
    rec.completion = op.completion;
    if (op.kernel >= 0) {
        kernel_fns_[static_cast<std::size_t>(op.kernel)](arena_, op.args);
        rec.what = "kernel:" + kernel_names_[static_cast<std::size_t>(op.kernel)];
        std::uint64_t h = 14695981039346656037ull;
        for (const OutputSpan& s : op.args.outputs)
            h ^= fnv1a(arena_.raw(s.offset), s.bytes);
        rec.checksum = h;
    } else {
        std::memmove(arena_.raw(op.copy_dst), arena_.raw(op.copy_src), op.copy_bytes);
        rec.what = "copy";
        rec.checksum = fnv1a(arena_.raw(op.copy_dst), op.copy_bytes);
    }
    op.applied = true;
    log_.push_back(std::move(rec));
}

void Device::process_completions_until(Time t) {
    std::lock_guard lk(mu_);
    while (!pending_.empty() && pending_.front().first <= t) {
        OpId id = pending_.front().second;
        std::pop_heap(pending_.begin(), pending_.end(), PendingOrder{});
        pending_.pop_back();
        Op& op = ops_.at(id);
        if (!op.applied)
            apply_locked(op);
    }
}

bool Device::query(EventId ev) {
    Time t = event_time(ev);
    Time now = observer_now();
    process_completions_until(now);
    return t <= now;
}

void Device::wait(EventId ev) {
    Time t = event_time(ev);
    if (virtual_clock_) {
        if (this_task::in_task()) {
            this_task::block_until(t);
            process_completions_until(this_task::now());
        } else {
            process_completions_until(t);
        }
        return;
    }
    if (this_task::in_task()) {
        this_task::block_on([this, t] {
            std::unique_lock lk(mu_);
            cv_.wait(lk, [this, t] { return sub_.now() >= t && applied_up_to_locked(t); });
        });
    } else {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [this, t] { return sub_.now() >= t && applied_up_to_locked(t); });
    }
}

void Device::synchronize_stream(StreamId stream) { wait(record_event(stream)); }

std::vector<CompletionRecord> Device::completion_log() const {
    std::lock_guard lk(mu_);
    return log_;
}

std::size_t Device::completed_count() const {
    std::lock_guard lk(mu_);
    return log_.size();
}

Time Device::stream_tail(StreamId stream) const {
    std::lock_guard lk(mu_);
    if (stream < 0 || static_cast<std::size_t>(stream) >= stream_tails_.size())
        throw ContractViolation("unknown stream " + std::to_string(stream));
    return stream_tails_[static_cast<std::size_t>(stream)];
}

// Real-clock effect applier: sleeps until the earliest pending completion,
// applies due effects, wakes waiters.
void Device::device_thread() {
    std::unique_lock lk(mu_);
    for (;;) {
        if (shutdown_)
            return;
        if (pending_.empty()) {
            cv_.wait(lk);
            continue;
        }
        Time next = pending_.front().first;
        Time now = sub_.now();
        if (next > now) {
            cv_.wait_for(lk, std::chrono::duration<double>(next - now));
            continue;
        }
        while (!pending_.empty() && pending_.front().first <= now) {
            OpId id = pending_.front().second;
            std::pop_heap(pending_.begin(), pending_.end(), PendingOrder{});
            pending_.pop_back();
            Op& op = ops_.at(id);
            if (!op.applied)
                apply_locked(op);
        }
        cv_.notify_all();
    }
}

} // namespace tw::sim
