#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "taskweave/substrate.hpp"
#include "taskweave/types.hpp"

namespace tw::sim {

// Flat device memory: a bump allocator over one contiguous buffer. Offsets
// are the currency between host code and kernels; nothing is ever freed.
class MemoryArena {
public:
    explicit MemoryArena(std::size_t bytes) : buf_(bytes) {}

    std::uint64_t allocate(std::size_t bytes, std::size_t align = 8);

    template <typename T>
    std::span<T> view(std::uint64_t offset, std::size_t count) {
        check_range(offset, count * sizeof(T), alignof(T));
        return {reinterpret_cast<T*>(buf_.data() + offset), count};
    }

    std::byte* raw(std::uint64_t offset) { return buf_.data() + offset; }
    const std::byte* raw(std::uint64_t offset) const { return buf_.data() + offset; }
    std::size_t capacity() const { return buf_.size(); }
    std::size_t used() const { return used_; }

private:
    void check_range(std::uint64_t offset, std::size_t bytes, std::size_t align) const;

    std::vector<std::byte> buf_;
    std::size_t used_ = 0;
};

struct OutputSpan {
    std::uint64_t offset = 0;
    std::uint64_t bytes = 0;
};

// Launch-time arguments. `outputs` names the regions the kernel writes; the
// completion checksum covers exactly those bytes.
struct KernelArgs {
    std::vector<std::uint64_t> u; // offsets, counts
    std::vector<double> f;        // scalars
    std::vector<OutputSpan> outputs;
};

using KernelFn = std::function<void(MemoryArena&, const KernelArgs&)>;
using StreamId = int;
using EventId = std::uint64_t;
using OpId = std::uint64_t;

struct DeviceConfig {
    double launch_overhead = 0.05;     // device-side gap added to every op
    double copy_base_cost = 0.1;       // copy duration = base + bytes * per_byte
    double copy_cost_per_byte = 1.0 / 65536.0;
    std::size_t arena_bytes = 64u << 20;
};

struct CompletionRecord {
    OpId op = 0;
    StreamId stream = 0;
    std::string what; // "kernel:<name>" or "copy"
    Time enqueue = 0;
    Time start = 0;
    Time completion = 0;
    std::uint64_t checksum = 0;
};

// Simulated accelerator with in-order streams and host-visible events.
//
// The timing model: an op enqueued at e on a stream whose last op completes
// at tail starts at max(e, tail) and completes overhead + cost later. Effects
// (the kernel body, the copy) apply at completion, in (completion, enqueue
// order); an observer at time t that queries or waits forces every op with
// completion <= t to apply first, so effect visibility never depends on who
// noticed the completion. Under the virtual clock this is exact and
// deterministic; under real threads a service thread applies effects at
// scaled wall-clock deadlines.
class Device {
public:
    Device(Substrate& sub, DeviceConfig cfg);
    ~Device();

    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    MemoryArena& arena() { return arena_; }

    int register_kernel(std::string name, KernelFn fn);

    StreamId create_stream();
    OpId enqueue_kernel(StreamId stream, int kernel, KernelArgs args, double cost);
    OpId enqueue_copy(StreamId stream, std::uint64_t dst, std::uint64_t src,
                      std::uint64_t bytes);

    // Marks a point in the stream; complete once every op enqueued before it
    // has completed.
    EventId record_event(StreamId stream);

    Time event_time(EventId ev) const;
    bool query(EventId ev);

    // Suspends the calling worker (virtual clock: parks the task, keeping
    // its worker occupied; real threads: native wait) until the event
    // completes, then applies every effect due by then.
    void wait(EventId ev);
    void synchronize_stream(StreamId stream);

    // Applies every unapplied op with completion <= t. Idempotent; safe to
    // call from polling tasks, queries, and timeline events alike.
    void process_completions_until(Time t);

    std::vector<CompletionRecord> completion_log() const;
    std::size_t completed_count() const;
    Time stream_tail(StreamId stream) const;

private:
    struct Op {
        OpId id = 0;
        StreamId stream = 0;
        int kernel = -1; // -1 marks a copy
        KernelArgs args;
        std::uint64_t copy_dst = 0, copy_src = 0, copy_bytes = 0;
        Time enqueue = 0, start = 0, completion = 0;
        bool applied = false;
    };

    Time observer_now() const;
    OpId enqueue_locked(Op op, double duration);
    void apply_locked(Op& op);
    bool applied_up_to_locked(Time t) const {
        return pending_.empty() || pending_.front().first > t;
    }
    void device_thread();

    Substrate& sub_;
    DeviceConfig cfg_;
    MemoryArena arena_;
    bool virtual_clock_;
    double unit_scale_; // model units to substrate-clock units

    mutable std::mutex mu_;
    std::vector<std::string> kernel_names_;
    std::vector<KernelFn> kernel_fns_;
    std::vector<Time> stream_tails_;
    std::map<OpId, Op> ops_; // keyed by enqueue order
    std::vector<std::pair<Time, OpId>> pending_; // min-heap by (completion, id)
    std::vector<std::pair<StreamId, Time>> events_;
    std::vector<CompletionRecord> log_;

    std::thread worker_;
    std::condition_variable cv_;
    bool shutdown_ = false;
};

std::uint64_t fnv1a(const std::byte* data, std::size_t n);

} // namespace tw::sim
