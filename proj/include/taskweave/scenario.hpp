#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "taskweave/config.hpp"

namespace tw::cli {

// One CSV row: a single iteration of a single repetition. The usage columns
// hold per-worker totals over the whole repetition (semicolon-joined), so
// they repeat across the repetition's rows; iter_time is the only
// iteration-local figure.
struct MetricsRow {
    std::string scenario;
    int repetition = 0;
    int iteration = 0;
    bool warmup = false;
    double iter_time = 0;
    std::vector<double> busy, blocked, suspended, idle;
    std::uint64_t tasks_executed = 0;
    std::uint64_t events_polled = 0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricsRow& row);
// Parses a full CSV document (header line first). Doubles round-trip
// losslessly. Throws ConfigError with a line number on malformed input.
std::vector<MetricsRow> parse_metrics_csv(std::istream& is);

// One sweep point: every repetition at one tile count.
struct PointResult {
    int tile = 0;
    std::vector<MetricsRow> rows;
    std::string run_log; // last repetition, run-log TSV
    std::string dot;     // last repetition, internal tasks excluded
    std::vector<double> residual_history; // cg only, last repetition
    // Mean iteration time over non-warmup rows (all rows when every row is
    // warmup); the sweep comparison figure.
    double steady_iter_time = 0;
};

PointResult run_point(const ScenarioConfig& cfg, int tile);
std::vector<PointResult> run_sweep(const ScenarioConfig& cfg);

std::string metrics_to_csv(const std::vector<PointResult>& points);

// Per-worker blocked and suspended totals from a run-log stream.
struct TraceReport {
    struct Worker {
        int worker = 0;
        double busy = 0, blocked = 0, suspended = 0, idle = 0;
    };
    std::vector<Worker> workers;
    double total_blocked = 0;
    double total_suspended = 0;
};

TraceReport summarize_trace(std::istream& is);
std::string render_trace_report(const TraceReport& rep);

// DAG of one run as Graphviz text. iteration < 0 exports every non-internal
// task; otherwise only the tasks whose label carries that iteration index
// (CG task labels are name:iteration:tile).
std::string export_dag(const ScenarioConfig& cfg, int tile, int iteration);

} // namespace tw::cli
