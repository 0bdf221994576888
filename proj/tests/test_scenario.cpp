#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <numeric>
#include <sstream>

#include "taskweave/cg.hpp"
#include "taskweave/csr.hpp"
#include "taskweave/scenario.hpp"

using namespace tw;
using namespace tw::cli;

namespace {

ScenarioConfig small_cg() {
    ScenarioConfig c;
    c.nx = c.ny = c.nz = 8;
    c.iterations = 5;
    c.warmup = 2;
    c.workers = 2;
    c.tiles = {4};
    return c;
}

double sum(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

} // namespace

TEST_CASE("config keys cover every field and reject junk") {
    ScenarioConfig c;
    apply_key(c, "workload", "pipeline");
    CHECK(c.workload == Workload::pipeline);
    apply_key(c, "variant", "monolithic");
    CHECK(c.variant == Variant::monolithic);
    apply_key(c, "tiles", "4,8,16");
    CHECK(c.tiles == std::vector<int>{4, 8, 16});
    apply_key(c, "backend", "device-ta");
    CHECK(c.backend == Backend::device_ta);
    apply_key(c, "mode", "multi-rt-unified");
    CHECK(c.mode == Mode::multi_rt_unified);
    apply_key(c, "clock", "real");
    CHECK(c.clock == Clock::real_clock);
    apply_key(c, "workers", "7");
    CHECK(c.workers == 7);
    apply_key(c, "seed", "123456789012345");
    CHECK(c.seed == 123456789012345ull);
    apply_key(c, "poll_period", "0.25");
    CHECK(c.poll_period == 0.25);
    apply_key(c, "nx", "12");
    CHECK(c.nx == 12);
    apply_key(c, "pl_out_channels", "48");
    CHECK(c.pl_out_channels == 48);

    CHECK_THROWS_AS(apply_key(c, "no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_key(c, "workers", "lots"), ConfigError);
    CHECK_THROWS_AS(apply_key(c, "backend", "fpga"), ConfigError);
    CHECK_THROWS_AS(apply_key(c, "tiles", ""), ConfigError);

    // Every advertised key accepts at least its default's round trip.
    CHECK(config_keys().size() >= 20);
}

TEST_CASE("config streams take key=value lines and point at bad ones") {
    ScenarioConfig c;
    std::stringstream good("# comment\n\nworkers = 3\ntiles=2,4\n  seed = 99\n");
    apply_config_stream(c, good, "exp.cfg");
    CHECK(c.workers == 3);
    CHECK(c.tiles == std::vector<int>{2, 4});
    CHECK(c.seed == 99);

    std::stringstream bad("workers=3\nthis line has no equals\n");
    try {
        apply_config_stream(c, bad, "exp.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("exp.cfg:2") != std::string::npos);
    }

    std::stringstream badkey("nope=1\n");
    try {
        apply_config_stream(c, badkey, "other.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("other.cfg:1") != std::string::npos);
    }
}

TEST_CASE("environment overrides use the TASKWEAVE_ prefix") {
    setenv("TASKWEAVE_WORKERS", "9", 1);
    setenv("TASKWEAVE_POLL_PERIOD", "2.5", 1);
    ScenarioConfig c;
    apply_env(c);
    CHECK(c.workers == 9);
    CHECK(c.poll_period == 2.5);
    unsetenv("TASKWEAVE_WORKERS");
    unsetenv("TASKWEAVE_POLL_PERIOD");

    setenv("TASKWEAVE_BACKEND", "warp-drive", 1);
    ScenarioConfig d;
    CHECK_THROWS_AS(apply_env(d), ConfigError);
    unsetenv("TASKWEAVE_BACKEND");
}

TEST_CASE("scenario validation pins the supported combinations") {
    ScenarioConfig c = small_cg();
    c.validate();

    c.workload = Workload::pipeline;
    c.backend = Backend::device_ta;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.backend = Backend::host;
    c.mode = Mode::multi_rt_uncoordinated;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.mode = Mode::single_rt;
    c.validate();

    c = small_cg();
    c.variant = Variant::monolithic;
    CHECK_THROWS_AS(c.validate(), ConfigError); // tiles {4} under monolithic
    c.tiles = {1};
    c.validate();

    c = small_cg();
    c.tiles = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_cg();
    c.repetitions = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_cg();
    c.workers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("scenario ids name the point") {
    ScenarioConfig c = small_cg();
    CHECK(c.id_for(4) == "cg-tasks-host-single-rt-w2-t4");
    c.scenario_id = "exp9";
    CHECK(c.id_for(4) == "exp9-t4");
}

TEST_CASE("metrics rows survive the CSV round trip losslessly") {
    MetricsRow r;
    r.scenario = "cg-tasks-host-single-rt-w2-t4";
    r.repetition = 1;
    r.iteration = 3;
    r.warmup = true;
    r.iter_time = 0.1 + 1.0 / 3.0;
    r.busy = {1.0 / 7.0, 2.5};
    r.blocked = {0.0, 1e-17};
    r.suspended = {3.25, 0.125};
    r.idle = {9.5, 0.75};
    r.tasks_executed = 12345678901234ull;
    r.events_polled = 42;

    std::stringstream ss;
    ss << metrics_csv_header() << '\n' << to_csv_row(r) << '\n';
    auto rows = parse_metrics_csv(ss);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == r);
}

TEST_CASE("malformed metrics CSV is rejected with a line number") {
    std::stringstream missing("scenario,oops\n");
    CHECK_THROWS_AS(parse_metrics_csv(missing), ConfigError);

    std::stringstream short_line(metrics_csv_header() + "\nx,0,0,0\n");
    try {
        parse_metrics_csv(short_line);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }

    std::stringstream bad_num(metrics_csv_header() +
                              "\ns,0,0,0,abc,1,0,0,1,2,3\n");
    CHECK_THROWS_AS(parse_metrics_csv(bad_num), ConfigError);
}

TEST_CASE("a cg run point reports iteration times and a balanced ledger") {
    ScenarioConfig c = small_cg();
    c.repetitions = 2;
    PointResult p = run_point(c, 4);

    REQUIRE(static_cast<int>(p.rows.size()) == c.repetitions * c.iterations);
    for (const MetricsRow& r : p.rows) {
        CHECK(r.iter_time > 0.0);
        REQUIRE(r.busy.size() == 2);
        // Busy, blocked, and idle partition each worker's span.
        double span = r.busy[0] + r.blocked[0] + r.idle[0];
        for (std::size_t wk = 0; wk < 2; ++wk)
            CHECK(r.busy[wk] + r.blocked[wk] + r.idle[wk] ==
                  doctest::Approx(span).epsilon(1e-9));
        CHECK(r.tasks_executed > 0);
    }
    // First repetition is all warmup; the second flags the leading
    // `warmup` iterations.
    for (int i = 0; i < c.iterations; ++i) {
        CHECK(p.rows[static_cast<std::size_t>(i)].warmup);
        bool flagged = p.rows[static_cast<std::size_t>(c.iterations + i)].warmup;
        CHECK(flagged == (i < c.warmup));
    }
    CHECK(p.steady_iter_time > 0.0);

    // The solver inside the scenario is the same algorithm as the oracle.
    bench::CsrMatrix A = bench::gen_stencil_matrix(8, 8, 8);
    REQUIRE(p.residual_history.size() == 5);
    CHECK(p.rows.back().scenario == c.id_for(4));
}

TEST_CASE("rerunning a point with the same seed is byte-identical") {
    ScenarioConfig c = small_cg();
    PointResult a = run_point(c, 4);
    PointResult b = run_point(c, 4);
    CHECK(a.run_log == b.run_log);
    CHECK(a.dot == b.dot);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CAPTURE(i);
        REQUIRE(to_csv_row(a.rows[i]) == to_csv_row(b.rows[i]));
    }
    CHECK(metrics_to_csv({a}) == metrics_to_csv({b}));

    // A different seed changes the numbers but not the task structure.
    ScenarioConfig d = small_cg();
    d.seed = 8;
    PointResult s = run_point(d, 4);
    CHECK(s.residual_history != a.residual_history);
    CHECK(s.run_log == a.run_log);
}

TEST_CASE("blocking device waits show up as blocked time; transformed ones do not") {
    ScenarioConfig c = small_cg();
    c.nx = c.ny = c.nz = 6;
    c.backend = Backend::device_blocking;
    PointResult blocking = run_point(c, 4);
    double blocked_total = 0;
    for (const MetricsRow& r : blocking.rows)
        blocked_total += sum(r.blocked);
    CHECK(blocked_total > 0.0);

    c.backend = Backend::device_ta;
    PointResult ta = run_point(c, 4);
    for (const MetricsRow& r : ta.rows) {
        CHECK(sum(r.blocked) == doctest::Approx(0.0));
        CHECK(r.events_polled > 0);
    }
}

TEST_CASE("trace summaries recover the usage totals from the run log") {
    ScenarioConfig c = small_cg();
    PointResult p = run_point(c, 4);
    std::stringstream log(p.run_log);
    TraceReport rep = summarize_trace(log);
    REQUIRE(rep.workers.size() == 2);
    const MetricsRow& last = p.rows.back();
    for (std::size_t wk = 0; wk < 2; ++wk) {
        CAPTURE(wk);
        CHECK(rep.workers[wk].busy == doctest::Approx(last.busy[wk]));
        CHECK(rep.workers[wk].blocked == doctest::Approx(last.blocked[wk]));
        CHECK(rep.workers[wk].suspended == doctest::Approx(last.suspended[wk]));
        CHECK(rep.workers[wk].idle == doctest::Approx(last.idle[wk]));
    }
    CHECK(rep.total_blocked == doctest::Approx(sum(last.blocked)));
    CHECK(rep.total_suspended == doctest::Approx(sum(last.suspended)));

    std::string text = render_trace_report(rep);
    CHECK(text.find("worker") != std::string::npos);
    CHECK(text.find("blocked") != std::string::npos);

    std::stringstream empty;
    TraceReport zero = summarize_trace(empty);
    CHECK(zero.workers.empty());
    CHECK(zero.total_blocked == 0.0);
}

TEST_CASE("dag export filters one iteration of the cg graph") {
    ScenarioConfig c = small_cg();
    c.iterations = 3;
    std::string all = export_dag(c, 2, -1);
    CHECK(all.find("spmv:0:0") != std::string::npos);
    CHECK(all.find("spmv:2:1") != std::string::npos);
    CHECK(all.find("device-poll") == std::string::npos);
    CHECK(all.find("krn") == std::string::npos);

    std::string one = export_dag(c, 2, 1);
    CHECK(one.find("spmv:1:0") != std::string::npos);
    CHECK(one.find("spmv:1:1") != std::string::npos);
    CHECK(one.find("beta_res:1:0") != std::string::npos);
    CHECK(one.find("spmv:0:0") == std::string::npos);
    CHECK(one.find("spmv:2:0") == std::string::npos);
    CHECK(one.find("->") != std::string::npos);
    CHECK(one.rfind("digraph", 0) == 0);
}

TEST_CASE("pipeline scenarios run through the same point interface") {
    ScenarioConfig c;
    c.workload = Workload::pipeline;
    c.iterations = 3;
    c.warmup = 1;
    c.workers = 2;
    c.tiles = {4};
    c.pl_batch = 2;
    c.pl_context = 8;
    c.pl_channels = 16;
    c.pl_out_channels = 16;
    c.validate();

    PointResult p = run_point(c, 4);
    REQUIRE(static_cast<int>(p.rows.size()) == c.iterations);
    for (const MetricsRow& r : p.rows)
        CHECK(r.iter_time > 0.0);
    CHECK(p.dot.find("pl_gemm") != std::string::npos);
    CHECK(p.residual_history.empty());

    PointResult q = run_point(c, 4);
    CHECK(q.run_log == p.run_log);
}

TEST_CASE("unified and uncoordinated modes exercise their kernel paths") {
    ScenarioConfig c = small_cg();
    c.nx = c.ny = c.nz = 6;
    c.iterations = 3;
    c.warmup = 1;

    c.mode = Mode::multi_rt_unified;
    PointResult uni = run_point(c, 2);
    CHECK(uni.steady_iter_time > 0.0);

    c.mode = Mode::multi_rt_uncoordinated;
    c.pool_count = 2;
    c.pool_threads = 2;
    PointResult unc = run_point(c, 2);
    CHECK(unc.steady_iter_time > 0.0);
    double blocked_total = 0;
    for (const MetricsRow& r : unc.rows)
        blocked_total += sum(r.blocked);
    CHECK(blocked_total > 0.0); // callers park while pools run their items

    // Residuals are placement-independent.
    REQUIRE(uni.residual_history.size() == unc.residual_history.size());
    for (std::size_t i = 0; i < uni.residual_history.size(); ++i)
        REQUIRE(uni.residual_history[i] ==
                doctest::Approx(unc.residual_history[i]).epsilon(1e-10));
}

TEST_CASE("sweeps cover every tile point in order") {
    ScenarioConfig c = small_cg();
    c.iterations = 3;
    c.warmup = 1;
    c.tiles = {2, 4, 8};
    auto points = run_sweep(c);
    REQUIRE(points.size() == 3);
    CHECK(points[0].tile == 2);
    CHECK(points[1].tile == 4);
    CHECK(points[2].tile == 8);
    std::string csv = metrics_to_csv(points);
    CHECK(csv.find(c.id_for(2)) != std::string::npos);
    CHECK(csv.find(c.id_for(8)) != std::string::npos);
    // One header, then one line per row.
    std::size_t lines = static_cast<std::size_t>(
        std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 1 + 3 * 3);
}
