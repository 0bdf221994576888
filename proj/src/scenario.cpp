#include "taskweave/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

#include "taskweave/cg.hpp"
#include "taskweave/pipeline.hpp"
#include "taskweave/runtime.hpp"

namespace tw::cli {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i)
            out += ';';
        out += fmt_double(vs[i]);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';'))
        out.push_back(std::stod(item));
    return out;
}

// Deterministic uniform doubles in [0, 1); stdlib distributions are not
// pinned across library versions, the scenario files promise byte-stable
// output, so the generator is spelled out.
struct SplitMix64 {
    std::uint64_t s;
    double next() {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
};

struct RepOutcome {
    std::vector<double> iter_times;
    std::vector<double> residuals;
    std::string log_text;
    std::string dot_all;
    std::vector<WorkerUsage> usage;
    std::uint64_t tasks_executed = 0;
    std::uint64_t events_polled = 0;
    // DAG snapshot for filtered exports: (id, label, state) plus edges.
    std::vector<std::tuple<TaskId, std::string, std::string>> nodes;
    std::vector<std::pair<TaskId, TaskId>> edges;
};

RepOutcome run_rep(const ScenarioConfig& cfg, int tile) {
    RuntimeConfig rc;
    rc.substrate.workers = static_cast<unsigned>(cfg.workers);
    rc.substrate.clock =
        cfg.clock == Clock::virtual_clock ? ClockMode::virtual_time : ClockMode::real_threads;
    rc.substrate.mode = cfg.mode == Mode::multi_rt_uncoordinated ? SchedulingMode::uncoordinated
                                                                 : SchedulingMode::unified;
    rc.poll_period = cfg.poll_period;
    rc.contention.cores = static_cast<unsigned>(cfg.workers);

    Runtime rt(rc);
    std::vector<std::unique_ptr<pool::LegacyPool>> pools;
    if (cfg.mode == Mode::multi_rt_uncoordinated)
        for (int k = 0; k < cfg.pool_count; ++k)
            pools.push_back(std::make_unique<pool::LegacyPool>(
                rt.substrate(), rt.contention(), static_cast<unsigned>(cfg.pool_threads),
                "pool" + std::to_string(k)));

    RepOutcome out;

    if (cfg.workload == Workload::cg) {
        bench::CsrMatrix A = bench::gen_stencil_matrix(cfg.nx, cfg.ny, cfg.nz);
        std::vector<double> b(static_cast<std::size_t>(A.n));
        SplitMix64 rng{cfg.seed};
        for (double& v : b)
            v = rng.next();

        bench::CgOptions o;
        o.tiles = tile;
        o.backend = cfg.backend == Backend::host ? bench::CgBackend::host
                    : cfg.backend == Backend::device_ta ? bench::CgBackend::device_ta
                                                        : bench::CgBackend::device_blocking;
        o.placement = cfg.mode == Mode::single_rt ? bench::KernelPlacement::inline_exec
                      : cfg.mode == Mode::multi_rt_uncoordinated
                          ? bench::KernelPlacement::pooled
                          : bench::KernelPlacement::subtask;
        for (auto& p : pools)
            o.pools.push_back(p.get());
        o.stream_pool_capacity = static_cast<unsigned>(cfg.stream_pool);

        bench::CgResult r = cfg.variant == Variant::monolithic
                                ? bench::cg_monolithic(rt, A, b, cfg.iterations, o)
                                : bench::cg_tasks(rt, A, b, cfg.iterations, o);
        out.residuals = std::move(r.residual_history);

        std::vector<double> mark_time(static_cast<std::size_t>(cfg.iterations), 0.0);
        for (const LogRecord& rec : rt.log().sorted())
            if (rec.transition == Transition::mark && rec.note.rfind("cg_iter=", 0) == 0)
                mark_time[static_cast<std::size_t>(
                    std::stoi(rec.note.substr(sizeof("cg_iter=") - 1)))] = rec.time;
        double prev = 0;
        for (double t : mark_time) {
            out.iter_times.push_back(t - prev);
            prev = t;
        }
    } else {
        bench::PipelineConfig pc;
        pc.B = cfg.pl_batch;
        pc.T = cfg.pl_context;
        pc.C = cfg.pl_channels;
        pc.OC = cfg.pl_out_channels;
        pc.b_gran = cfg.pl_b_gran;
        pc.t_gran = cfg.pl_t_gran;
        pc.oc_split = tile;
        auto variant = cfg.variant == Variant::monolithic ? bench::PipelineVariant::monolithic
                                                          : bench::PipelineVariant::tasks;
        for (int step = 0; step < cfg.iterations; ++step) {
            Time t0 = rt.substrate().now();
            bench::pipeline_step(rt, pc, variant);
            out.iter_times.push_back(rt.substrate().now() - t0);
        }
    }

    std::vector<LogRecord> sorted = rt.log().sorted();
    Time span = sorted.empty() ? 0.0 : sorted.back().time;
    out.usage = accumulate_usage(sorted, cfg.workers, 0.0, span);
    for (const LogRecord& rec : sorted) {
        if (rec.transition == Transition::finished)
            ++out.tasks_executed;
        if (rec.transition == Transition::mark && rec.note.rfind("poll_resolved=", 0) == 0)
            out.events_polled += static_cast<std::uint64_t>(
                std::stoll(rec.note.substr(sizeof("poll_resolved=") - 1)));
    }

    std::ostringstream ls;
    rt.log().write(ls);
    out.log_text = ls.str();
    out.dot_all = rt.deps().export_dot(false);
    for (TaskId id : rt.deps().task_ids())
        out.nodes.emplace_back(id, rt.deps().label(id), to_string(rt.deps().state(id)));
    out.edges = rt.deps().edges();
    return out;
}

// CG task labels are name:iteration:tile; keep only one iteration's tasks.
bool label_in_iteration(const std::string& label, int iteration) {
    std::size_t a = label.find(':');
    if (a == std::string::npos)
        return false;
    std::size_t b = label.find(':', a + 1);
    if (b == std::string::npos)
        return false;
    return label.substr(a + 1, b - a - 1) == std::to_string(iteration);
}

} // namespace

std::string metrics_csv_header() {
    return "scenario,repetition,iteration,warmup,iter_time,busy,blocked,suspended,idle,"
           "tasks_executed,events_polled";
}

std::string to_csv_row(const MetricsRow& row) {
    std::string out = row.scenario;
    out += ',' + std::to_string(row.repetition);
    out += ',' + std::to_string(row.iteration);
    out += ',';
    out += row.warmup ? '1' : '0';
    out += ',' + fmt_double(row.iter_time);
    out += ',' + join_doubles(row.busy);
    out += ',' + join_doubles(row.blocked);
    out += ',' + join_doubles(row.suspended);
    out += ',' + join_doubles(row.idle);
    out += ',' + std::to_string(row.tasks_executed);
    out += ',' + std::to_string(row.events_polled);
    return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& is) {
    std::vector<MetricsRow> out;
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (!saw_header) {
            if (line != metrics_csv_header())
                throw ConfigError("metrics csv line " + std::to_string(lineno) +
                                  ": unexpected header '" + line + "'");
            saw_header = true;
            continue;
        }
        try {
            std::vector<std::string> f;
            std::stringstream ss(line);
            std::string item;
            while (std::getline(ss, item, ','))
                f.push_back(item);
            if (f.size() != 11)
                throw ConfigError("expected 11 comma-separated fields, got " +
                                  std::to_string(f.size()));
            MetricsRow row;
            row.scenario = f[0];
            row.repetition = std::stoi(f[1]);
            row.iteration = std::stoi(f[2]);
            if (f[3] != "0" && f[3] != "1")
                throw ConfigError("warmup flag must be 0 or 1");
            row.warmup = f[3] == "1";
            row.iter_time = std::stod(f[4]);
            row.busy = split_doubles(f[5]);
            row.blocked = split_doubles(f[6]);
            row.suspended = split_doubles(f[7]);
            row.idle = split_doubles(f[8]);
            row.tasks_executed = static_cast<std::uint64_t>(std::stoull(f[9]));
            row.events_polled = static_cast<std::uint64_t>(std::stoull(f[10]));
            out.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw ConfigError("metrics csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!saw_header)
        throw ConfigError("metrics csv: missing header");
    return out;
}

PointResult run_point(const ScenarioConfig& cfg, int tile) {
    cfg.validate();
    PointResult res;
    res.tile = tile;
    double steady_sum = 0, all_sum = 0;
    std::size_t steady_n = 0, all_n = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        RepOutcome out = run_rep(cfg, tile);
        for (std::size_t i = 0; i < out.iter_times.size(); ++i) {
            MetricsRow row;
            row.scenario = cfg.id_for(tile);
            row.repetition = rep;
            row.iteration = static_cast<int>(i);
            row.warmup = (cfg.repetitions > 1 && rep == 0) ||
                         i < static_cast<std::size_t>(cfg.warmup);
            row.iter_time = out.iter_times[i];
            for (const WorkerUsage& u : out.usage) {
                row.busy.push_back(u.busy);
                row.blocked.push_back(u.blocked);
                row.suspended.push_back(u.suspended);
                row.idle.push_back(u.idle);
            }
            row.tasks_executed = out.tasks_executed;
            row.events_polled = out.events_polled;
            all_sum += row.iter_time;
            ++all_n;
            if (!row.warmup) {
                steady_sum += row.iter_time;
                ++steady_n;
            }
            res.rows.push_back(std::move(row));
        }
        if (rep == cfg.repetitions - 1) {
            res.run_log = std::move(out.log_text);
            res.dot = std::move(out.dot_all);
            res.residual_history = std::move(out.residuals);
        }
    }
    res.steady_iter_time =
        steady_n ? steady_sum / static_cast<double>(steady_n)
                 : (all_n ? all_sum / static_cast<double>(all_n) : 0.0);
    return res;
}

std::vector<PointResult> run_sweep(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<PointResult> out;
    for (int tile : cfg.tiles)
        out.push_back(run_point(cfg, tile));
    return out;
}

std::string metrics_to_csv(const std::vector<PointResult>& points) {
    std::string out = metrics_csv_header() + "\n";
    for (const PointResult& p : points)
        for (const MetricsRow& row : p.rows)
            out += to_csv_row(row) + "\n";
    return out;
}

TraceReport summarize_trace(std::istream& is) {
    std::vector<LogRecord> log = RunLog::parse(is);
    int workers = 0;
    Time span = 0;
    for (const LogRecord& r : log) {
        workers = std::max(workers, r.worker + 1);
        span = std::max(span, r.time);
    }
    std::vector<WorkerUsage> usage = accumulate_usage(log, workers, 0.0, span);
    TraceReport rep;
    for (int w = 0; w < workers; ++w) {
        rep.workers.push_back({w, usage[static_cast<std::size_t>(w)].busy,
                               usage[static_cast<std::size_t>(w)].blocked,
                               usage[static_cast<std::size_t>(w)].suspended,
                               usage[static_cast<std::size_t>(w)].idle});
        rep.total_blocked += usage[static_cast<std::size_t>(w)].blocked;
        rep.total_suspended += usage[static_cast<std::size_t>(w)].suspended;
    }
    return rep;
}

std::string render_trace_report(const TraceReport& rep) {
    std::ostringstream os;
    for (const TraceReport::Worker& w : rep.workers)
        os << "worker " << w.worker << ": busy " << format_time(w.busy) << " blocked "
           << format_time(w.blocked) << " suspended " << format_time(w.suspended) << " idle "
           << format_time(w.idle) << "\n";
    os << "total: blocked " << format_time(rep.total_blocked) << " suspended "
       << format_time(rep.total_suspended) << "\n";
    return os.str();
}

std::string export_dag(const ScenarioConfig& cfg, int tile, int iteration) {
    ScenarioConfig one = cfg;
    one.repetitions = 1;
    one.validate();
    RepOutcome out = run_rep(one, tile);
    if (iteration < 0)
        return out.dot_all;

    std::ostringstream os;
    os << "digraph deps {\n";
    std::vector<TaskId> kept;
    for (const auto& [id, label, state] : out.nodes)
        if (label_in_iteration(label, iteration)) {
            kept.push_back(id);
            os << "  t" << id << " [label=\"" << id << ":" << label << ":" << state
               << "\"];\n";
        }
    for (const auto& [a, b] : out.edges)
        if (std::binary_search(kept.begin(), kept.end(), a) &&
            std::binary_search(kept.begin(), kept.end(), b))
            os << "  t" << a << " -> t" << b << ";\n";
    os << "}\n";
    return os.str();
}

} // namespace tw::cli
