#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <vector>

#include "oracles.hpp"
#include "taskweave/dep_system.hpp"
#include "taskweave/legacy_pool.hpp"
#include "taskweave/run_log.hpp"
#include "taskweave/substrate.hpp"

using namespace tw;
using namespace tw::pool;

namespace {

struct World {
    deps::DependencySystem deps;
    RunLog log;
    std::unique_ptr<Substrate> sub;
    InstanceId app;
    std::unique_ptr<CoreContention> model;

    explicit World(unsigned cores, unsigned workers = 4) {
        SubstrateConfig cfg;
        cfg.workers = workers;
        cfg.mode = SchedulingMode::uncoordinated;
        sub = Substrate::start(cfg, deps, log);
        app = sub->register_instance("app");
        ContentionConfig cc;
        cc.cores = cores;
        model = std::make_unique<CoreContention>(*sub, cc);
    }

    TaskId go(std::string label, std::function<void()> body) {
        TaskDef d;
        d.label = std::move(label);
        d.body = std::move(body);
        return sub->spawn(app, std::move(d));
    }
};

} // namespace

TEST_CASE("contention factor matches the closed form") {
    World w(8);
    // 4 pools x 8 threads on 8 cores, nobody running: 32/8 * (1 + 0.2) = 4.8.
    w.model->add_threads(32);
    CHECK(w.model->factor() == doctest::Approx(4.8));
    CHECK(w.model->factor() ==
          doctest::Approx(oracle::contention_factor(32, 8, 0.2, 1.0)));
    w.model->remove_threads(24);
    CHECK(w.model->factor() == doctest::Approx(1.0)); // 8 on 8 fits
    CHECK(oracle::contention_factor(8, 8, 0.2, 1.0) == doctest::Approx(1.0));
    w.model->add_threads(4);
    CHECK(w.model->factor() ==
          doctest::Approx(oracle::contention_factor(12, 8, 0.2, 1.0)));
    CHECK_THROWS_AS(CoreContention(*w.sub, ContentionConfig{0, 0.2, 1.0}),
                    ConfigError);
}

TEST_CASE("a pool that fits its cores runs items at face cost") {
    World w(8);
    LegacyPool pool(*w.sub, *w.model, 4, "fits");
    w.go("caller", [&] {
        pool.run_blocking(5.0);
        CHECK(this_task::now() == doctest::Approx(5.0));
    });
    w.sub->run();
    CHECK(pool.items_completed() == 1);
    CHECK(pool.total_queue_delay() == doctest::Approx(0.0));
}

TEST_CASE("four pools of eight threads on eight cores stretch items by 4.8") {
    World w(8);
    std::vector<std::unique_ptr<LegacyPool>> pools;
    for (int k = 0; k < 4; ++k)
        pools.push_back(std::make_unique<LegacyPool>(*w.sub, *w.model, 8,
                                                     "p" + std::to_string(k)));
    std::vector<double> done(4, -1);
    for (int k = 0; k < 4; ++k)
        w.go("caller" + std::to_string(k), [&, k] {
            pools[static_cast<std::size_t>(k)]->run_blocking(10.0);
            done[static_cast<std::size_t>(k)] = this_task::now();
        });
    w.sub->run();
    double expect = 10.0 * oracle::contention_factor(32, 8, 0.2, 1.0);
    for (int k = 0; k < 4; ++k) {
        CAPTURE(k);
        CHECK(done[static_cast<std::size_t>(k)] == doctest::Approx(expect));
    }
}

TEST_CASE("items overflow onto the earliest-free thread in FIFO order") {
    World w(64);
    LegacyPool pool(*w.sub, *w.model, 2, "two");
    std::vector<double> done(3, -1);
    for (int k = 0; k < 3; ++k)
        w.go("caller" + std::to_string(k), [&, k] {
            pool.run_blocking(4.0);
            done[static_cast<std::size_t>(k)] = this_task::now();
        });
    w.sub->run();
    CHECK(done[0] == doctest::Approx(4.0));
    CHECK(done[1] == doctest::Approx(4.0));
    CHECK(done[2] == doctest::Approx(8.0));
    CHECK(pool.total_queue_delay() == doctest::Approx(4.0));
    CHECK(pool.items_completed() == 3);
}

TEST_CASE("items queue in submission-time order, not body order") {
    World w(64, 2);
    LegacyPool pool(*w.sub, *w.model, 1, "one");
    double x_done = -1, y_done = -1;
    w.go("x", [&] {
        this_task::advance(1.0); // submits second despite spawning first
        pool.run_blocking(2.0);
        x_done = this_task::now();
    });
    w.go("y", [&] {
        pool.run_blocking(2.0);
        y_done = this_task::now();
    });
    w.sub->run();
    CHECK(y_done == doctest::Approx(2.0));
    CHECK(x_done == doctest::Approx(4.0));
}

TEST_CASE("the caller's worker stays blocked for the whole round trip") {
    World w(64, 1);
    LegacyPool pool(*w.sub, *w.model, 2, "two");
    TaskId caller = w.go("caller", [&] {
        this_task::advance(2.0);
        pool.run_blocking(3.0);
    });
    w.sub->run();
    auto usage = accumulate_usage(w.log.sorted(), 1, 0, w.sub->now());
    CHECK(usage[0].blocked == doctest::Approx(3.0));
    bool blocked_at_2 = false, unblocked_at_5 = false;
    for (const LogRecord& r : w.log.sorted()) {
        if (r.task != caller)
            continue;
        if (r.transition == Transition::blocked)
            blocked_at_2 = r.time == doctest::Approx(2.0);
        if (r.transition == Transition::unblocked)
            unblocked_at_5 = r.time == doctest::Approx(5.0);
    }
    CHECK(blocked_at_2);
    CHECK(unblocked_at_5);
}

TEST_CASE("pool work runs before the caller resumes") {
    World w(64);
    LegacyPool pool(*w.sub, *w.model, 1, "one");
    bool ran = false;
    w.go("caller", [&] {
        pool.run_blocking(1.0, [&] { ran = true; });
        CHECK(ran);
    });
    w.sub->run();
}

TEST_CASE("malformed pool use is rejected") {
    World w(8);
    CHECK_THROWS_AS(LegacyPool(*w.sub, *w.model, 0, "zero"), ConfigError);
    LegacyPool pool(*w.sub, *w.model, 1, "one");
    CHECK_THROWS_AS(pool.run_blocking(1.0), ContractViolation); // outside a task
    w.go("caller", [&] {
        CHECK_THROWS_AS(pool.run_blocking(-1.0), ContractViolation);
    });
    w.sub->run();
}

TEST_CASE("pool registration is visible to the shared model while alive") {
    World w(8);
    CHECK(w.model->competing() == 0);
    {
        LegacyPool a(*w.sub, *w.model, 8, "a");
        LegacyPool b(*w.sub, *w.model, 8, "b");
        CHECK(w.model->competing() == 16);
        CHECK(w.model->factor() ==
              doctest::Approx(oracle::contention_factor(16, 8, 0.2, 1.0)));
    }
    CHECK(w.model->competing() == 0);
    CHECK(w.model->factor() == doctest::Approx(1.0));
}
