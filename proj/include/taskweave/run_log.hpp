#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

#include "taskweave/types.hpp"

namespace tw {

enum class Transition : std::uint8_t {
    created,
    ready,
    running,
    suspended,
    blocked,
    unblocked,
    yielded,
    body_finished,
    finished,
    mark, // scenario annotation, not a task state change
};

// Who initiated a transition. The no-forced-preemption audit relies on every
// transition out of running carrying a self_* provenance.
enum class Provenance : std::uint8_t {
    submit,          // ready: predecessor-free at registration
    dep_release,     // ready: last predecessor finished
    dispatch,        // running: picked from the ready queue
    self_suspend,    // suspended: task parked itself
    self_yield,      // yielded: task gave up the worker voluntarily
    self_block,      // blocked: task entered a blocking device wait
    self_finish,     // body_finished: body returned
    device_complete, // unblocked: awaited device op completed
    poll_release,    // finished: pending-op counter drained via polling
    poll_resume,     // ready: polling resumed a suspended waiter
    external_resume, // ready: explicit resume(token)
    timer,           // ready: timed sleep elapsed
    taskwait_wake,   // ready: last live child finished
    none,
};

const char* to_string(Transition t);
const char* to_string(Provenance p);

struct LogRecord {
    Time time = 0;
    int worker = kNoWorker;
    TaskId task = kNoTask;
    Transition transition = Transition::mark;
    Provenance provenance = Provenance::none;
    std::string note; // task label on `created`, annotation text on `mark`
};

// Append-only transition log. Every scheduler in the process writes here;
// files are produced in one pass at the end so output bytes never depend on
// buffering.
class RunLog {
public:
    void append(LogRecord r);
    void mark(Time t, int worker, std::string note);

    const std::vector<LogRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    // Records land in processing order, which for deferred releases and
    // future-stamped waits is not timestamp order. Audits, metrics, and file
    // output all consume this view: stable-sorted by time, append order
    // preserved within a timestamp.
    std::vector<LogRecord> sorted() const;

    // Tab-separated serialization, one record per line, with a documented
    // header. Stable across runs for identical record streams.
    void write(std::ostream& os) const;
    static std::vector<LogRecord> parse(std::istream& is);

private:
    mutable std::mutex mu_;
    std::vector<LogRecord> records_;
};

// Formats a time the way every artifact file does (fixed six decimals).
std::string format_time(Time t);

struct AuditResult {
    std::size_t violations = 0;
    std::vector<std::string> details; // capped, for diagnostics
};

// Checks that no worker ever holds two tasks at once. A task occupies its
// worker from `running` until it suspends, yields, finishes its body, or is
// blocked in a device wait (blocked still occupies the worker).
AuditResult audit_one_task_per_worker(const std::vector<LogRecord>& log);

// Checks that every transition out of running was initiated by the task
// itself (self_* provenance): the substrate never preempts.
AuditResult audit_no_forced_preemption(const std::vector<LogRecord>& log);

// Per-worker wall-clock partition over a window, derived from the log.
// busy + blocked + idle == window span per worker; suspended is task time
// attributed to the worker that ran the suspending segment and lives outside
// the partition.
struct WorkerUsage {
    double busy = 0;
    double blocked = 0;
    double suspended = 0;
    double idle = 0;
};

std::vector<WorkerUsage> accumulate_usage(const std::vector<LogRecord>& log, int workers,
                                          Time from, Time to);

} // namespace tw
