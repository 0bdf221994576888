#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace tw {

using TaskId = std::uint64_t;
using InstanceId = std::uint32_t;

// Virtual clock units in virtual-time mode, seconds since engine start in
// real-thread mode. Double throughout: all virtual-time arithmetic is
// performed in the same order on every run, so values reproduce exactly.
using Time = double;

inline constexpr TaskId kNoTask = std::numeric_limits<TaskId>::max();
inline constexpr int kNoWorker = -1;

// Violation of an API precondition or an internal invariant. CLI maps this
// to exit code 2.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Malformed user input (config file, flags, environment). CLI maps this to
// exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ClockMode { virtual_time, real_threads };

// unified: every execution context is a substrate task on the shared worker
// set. uncoordinated: legacy thread pools live beside the substrate and
// bring their own threads.
enum class SchedulingMode { unified, uncoordinated };

enum class TaskState : std::uint8_t {
    created,
    ready,
    running,
    suspended,
    body_finished_pending_ops,
    finished,
};

const char* to_string(TaskState s);

} // namespace tw
