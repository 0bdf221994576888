#include "taskweave/run_log.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace tw {

const char* to_string(Transition t) {
    switch (t) {
    case Transition::created: return "created";
    case Transition::ready: return "ready";
    case Transition::running: return "running";
    case Transition::suspended: return "suspended";
    case Transition::blocked: return "blocked";
    case Transition::unblocked: return "unblocked";
    case Transition::yielded: return "yielded";
    case Transition::body_finished: return "body_finished";
    case Transition::finished: return "finished";
    case Transition::mark: return "mark";
    }
    return "?";
}

const char* to_string(Provenance p) {
    switch (p) {
    case Provenance::submit: return "submit";
    case Provenance::dep_release: return "dep_release";
    case Provenance::dispatch: return "dispatch";
    case Provenance::self_suspend: return "self_suspend";
    case Provenance::self_yield: return "self_yield";
    case Provenance::self_block: return "self_block";
    case Provenance::self_finish: return "self_finish";
    case Provenance::device_complete: return "device_complete";
    case Provenance::poll_release: return "poll_release";
    case Provenance::poll_resume: return "poll_resume";
    case Provenance::external_resume: return "external_resume";
    case Provenance::timer: return "timer";
    case Provenance::taskwait_wake: return "taskwait_wake";
    case Provenance::none: return "none";
    }
    return "?";
}

namespace {

template <typename E, int N>
E parse_enum(const std::string& s, const char* what) {
    for (int i = 0; i < N; ++i) {
        E v = static_cast<E>(i);
        if (s == to_string(v))
            return v;
    }
    throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

} // namespace

std::string format_time(Time t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    return buf;
}

void RunLog::append(LogRecord r) {
    std::lock_guard lk(mu_);
    records_.push_back(std::move(r));
}

void RunLog::mark(Time t, int worker, std::string note) {
    append(LogRecord{t, worker, kNoTask, Transition::mark, Provenance::none, std::move(note)});
}

std::vector<LogRecord> RunLog::sorted() const {
    std::vector<LogRecord> out;
    {
        std::lock_guard lk(mu_);
        out = records_;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LogRecord& a, const LogRecord& b) { return a.time < b.time; });
    return out;
}

void RunLog::write(std::ostream& os) const {
    os << "# taskweave run log v1\n";
    os << "# time\tworker\ttask\ttransition\tprovenance\tnote\n";
    for (const LogRecord& r : sorted()) {
        os << format_time(r.time) << '\t' << r.worker << '\t';
        if (r.task == kNoTask)
            os << -1;
        else
            os << static_cast<std::int64_t>(r.task);
        os << '\t' << to_string(r.transition) << '\t' << to_string(r.provenance) << '\t'
           << r.note << '\n';
    }
}

std::vector<LogRecord> RunLog::parse(std::istream& is) {
    std::vector<LogRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        try {
            std::array<std::string, 6> f;
            std::size_t pos = 0;
            for (int i = 0; i < 5; ++i) {
                std::size_t tab = line.find('\t', pos);
                if (tab == std::string::npos)
                    throw ConfigError("expected 6 tab-separated fields");
                f[i] = line.substr(pos, tab - pos);
                pos = tab + 1;
            }
            f[5] = line.substr(pos);
            LogRecord r;
            r.time = std::stod(f[0]);
            r.worker = std::stoi(f[1]);
            std::int64_t task = std::stoll(f[2]);
            r.task = task < 0 ? kNoTask : static_cast<TaskId>(task);
            r.transition = parse_enum<Transition, 10>(f[3], "transition");
            r.provenance = parse_enum<Provenance, 14>(f[4], "provenance");
            r.note = f[5];
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ConfigError("run log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

namespace {

void add_violation(AuditResult& res, std::string detail) {
    ++res.violations;
    if (res.details.size() < 20)
        res.details.push_back(std::move(detail));
}

} // namespace

AuditResult audit_one_task_per_worker(const std::vector<LogRecord>& log) {
    AuditResult res;
    // worker -> occupying task
    std::vector<TaskId> occupant;
    auto slot = [&](int w) -> TaskId& {
        if (w < 0)
            throw ContractViolation("audit: occupancy record without a worker");
        if (static_cast<std::size_t>(w) >= occupant.size())
            occupant.resize(w + 1, kNoTask);
        return occupant[static_cast<std::size_t>(w)];
    };
    for (const LogRecord& r : log) {
        switch (r.transition) {
        case Transition::running: {
            TaskId& o = slot(r.worker);
            if (o != kNoTask)
                add_violation(res, "t=" + format_time(r.time) + " worker " +
                                       std::to_string(r.worker) + " dispatched task " +
                                       std::to_string(r.task) + " while holding " +
                                       std::to_string(o));
            o = r.task;
            break;
        }
        case Transition::suspended:
        case Transition::yielded:
        case Transition::body_finished: {
            TaskId& o = slot(r.worker);
            if (o != r.task)
                add_violation(res, "t=" + format_time(r.time) + " worker " +
                                       std::to_string(r.worker) + " released task " +
                                       std::to_string(r.task) + " it was not running");
            o = kNoTask;
            break;
        }
        case Transition::blocked:
        case Transition::unblocked: {
            TaskId& o = slot(r.worker);
            if (o != r.task)
                add_violation(res, "t=" + format_time(r.time) + " blocked/unblocked task " +
                                       std::to_string(r.task) + " not occupying worker " +
                                       std::to_string(r.worker));
            break;
        }
        default:
            break;
        }
    }
    return res;
}

AuditResult audit_no_forced_preemption(const std::vector<LogRecord>& log) {
    AuditResult res;
    for (const LogRecord& r : log) {
        bool leaves_running = r.transition == Transition::suspended ||
                              r.transition == Transition::yielded ||
                              r.transition == Transition::body_finished ||
                              r.transition == Transition::blocked;
        if (!leaves_running)
            continue;
        bool self = r.provenance == Provenance::self_suspend ||
                    r.provenance == Provenance::self_yield ||
                    r.provenance == Provenance::self_finish ||
                    r.provenance == Provenance::self_block;
        if (!self)
            add_violation(res, "t=" + format_time(r.time) + " task " + std::to_string(r.task) +
                                   " left running via " + to_string(r.provenance));
    }
    return res;
}

std::vector<WorkerUsage> accumulate_usage(const std::vector<LogRecord>& log, int workers,
                                          Time from, Time to) {
    std::vector<WorkerUsage> usage(static_cast<std::size_t>(workers));
    std::vector<Time> busy_since(workers, -1), blocked_since(workers, -1);
    struct Susp {
        Time since;
        int worker;
    };
    std::map<TaskId, Susp> suspended; // ordered so leftover sums accumulate identically

    auto clip = [&](Time a, Time b) -> double {
        Time lo = std::max(a, from), hi = std::min(b, to);
        return hi > lo ? hi - lo : 0.0;
    };
    auto w_ok = [&](int w) { return w >= 0 && w < workers; };

    for (const LogRecord& r : log) {
        switch (r.transition) {
        case Transition::running:
            if (w_ok(r.worker))
                busy_since[r.worker] = r.time;
            if (auto it = suspended.find(r.task); it != suspended.end()) {
                if (w_ok(it->second.worker))
                    usage[it->second.worker].suspended += clip(it->second.since, r.time);
                suspended.erase(it);
            }
            break;
        case Transition::suspended:
            if (w_ok(r.worker) && busy_since[r.worker] >= 0) {
                usage[r.worker].busy += clip(busy_since[r.worker], r.time);
                busy_since[r.worker] = -1;
            }
            suspended[r.task] = Susp{r.time, r.worker};
            break;
        case Transition::yielded:
        case Transition::body_finished:
            if (w_ok(r.worker) && busy_since[r.worker] >= 0) {
                usage[r.worker].busy += clip(busy_since[r.worker], r.time);
                busy_since[r.worker] = -1;
            }
            break;
        case Transition::blocked:
            if (w_ok(r.worker)) {
                if (busy_since[r.worker] >= 0) {
                    usage[r.worker].busy += clip(busy_since[r.worker], r.time);
                    busy_since[r.worker] = -1;
                }
                blocked_since[r.worker] = r.time;
            }
            break;
        case Transition::unblocked:
            if (w_ok(r.worker)) {
                if (blocked_since[r.worker] >= 0) {
                    usage[r.worker].blocked += clip(blocked_since[r.worker], r.time);
                    blocked_since[r.worker] = -1;
                }
                busy_since[r.worker] = r.time;
            }
            break;
        default:
            break;
        }
    }
    for (int w = 0; w < workers; ++w) {
        if (busy_since[w] >= 0)
            usage[w].busy += clip(busy_since[w], to);
        if (blocked_since[w] >= 0)
            usage[w].blocked += clip(blocked_since[w], to);
        usage[w].idle = (to - from) - usage[w].busy - usage[w].blocked;
    }
    for (auto& [task, s] : suspended)
        if (w_ok(s.worker))
            usage[s.worker].suspended += clip(s.since, to);
    return usage;
}

} // namespace tw
