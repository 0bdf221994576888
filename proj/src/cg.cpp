#include "taskweave/cg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "taskweave/kernels.hpp"
#include "taskweave/sim_device.hpp"
#include "taskweave/task_aware.hpp"

namespace tw::bench {

namespace {

deps::AccessRegion reg(const void* p, std::size_t bytes, deps::AccessMode m) {
    return {reinterpret_cast<std::uint64_t>(p), bytes, m};
}

// One solve's state. Vectors either own host storage or view the device
// arena; task bodies reach everything through raw pointers, so the struct
// outlives the run on the heap.
struct CgRun {
    const CsrMatrix& A;
    std::int64_t n;
    CgOptions opt;
    std::vector<Tile> plan;

    std::vector<double> host_store; // host backend: x|r|p|Ap|pa|rr
    double* x = nullptr;
    double* r = nullptr;
    double* p = nullptr;
    double* Ap = nullptr;
    double* pa = nullptr; // p*Ap partials, one per tile
    double* rr = nullptr; // r*r partials, one per tile

    double rtrans = 0, alpha = 0, beta = 0;
    std::vector<double> history;

    sim::Device* dev = nullptr;
    ta::TaskAware* ta = nullptr;
    std::unique_ptr<ta::QueuePool> qpool;
    int spmv_kernel = -1;
    std::uint64_t p_off = 0, Ap_off = 0;

    CgRun(const CsrMatrix& a, CgOptions o) : A(a), n(a.n), opt(std::move(o)) {}
};

// Host kernel work routed by placement; `lane` spreads pooled items across
// the pools.
void exec_kernel(CgRun& run, int lane, double cost, std::function<void()> fn) {
    switch (run.opt.placement) {
    case KernelPlacement::inline_exec:
        fn();
        this_task::advance(cost);
        return;
    case KernelPlacement::pooled:
        run.opt.pools[static_cast<std::size_t>(lane) % run.opt.pools.size()]->run_blocking(
            cost, std::move(fn));
        return;
    case KernelPlacement::subtask: {
        TaskDef d;
        d.label = "krn";
        d.internal = true;
        d.body = std::move(fn);
        d.cost = cost;
        this_task::substrate().spawn(0, std::move(d));
        this_task::taskwait();
        return;
    }
    }
}

void setup_state(CgRun& run, Runtime& rt, const std::vector<double>& b, int iterations) {
    const std::int64_t n = run.n;
    const int T = run.opt.tiles;
    if (run.opt.placement == KernelPlacement::pooled && run.opt.pools.empty())
        throw ConfigError("pooled kernel placement needs at least one pool");

    if (run.opt.backend == CgBackend::host) {
        run.host_store.assign(static_cast<std::size_t>(4 * n + 2 * T), 0.0);
        run.x = run.host_store.data();
        run.r = run.x + n;
        run.p = run.r + n;
        run.Ap = run.p + n;
        run.pa = run.Ap + n;
        run.rr = run.pa + T;
    } else {
        sim::Device& dev = rt.device();
        sim::MemoryArena& ar = dev.arena();
        std::uint64_t x_off = ar.allocate(n * sizeof(double));
        std::uint64_t r_off = ar.allocate(n * sizeof(double));
        run.p_off = ar.allocate(n * sizeof(double));
        run.Ap_off = ar.allocate(n * sizeof(double));
        std::uint64_t pa_off = ar.allocate(T * sizeof(double));
        std::uint64_t rr_off = ar.allocate(T * sizeof(double));
        run.x = ar.view<double>(x_off, n).data();
        run.r = ar.view<double>(r_off, n).data();
        run.p = ar.view<double>(run.p_off, n).data();
        run.Ap = ar.view<double>(run.Ap_off, n).data();
        run.pa = ar.view<double>(pa_off, T).data();
        run.rr = ar.view<double>(rr_off, T).data();
        std::fill(run.x, run.x + n, 0.0);
        std::fill(run.r, run.r + n, 0.0);
        std::fill(run.p, run.p + n, 0.0);
        std::fill(run.Ap, run.Ap + n, 0.0);
        std::fill(run.pa, run.pa + T, 0.0);
        std::fill(run.rr, run.rr + T, 0.0);

        run.dev = &dev;
        run.ta = &rt.task_aware();
        run.qpool = std::make_unique<ta::QueuePool>(*run.ta, run.opt.stream_pool_capacity);
        run.spmv_kernel = dev.register_kernel(
            "spmv", [a = &run.A](sim::MemoryArena& m, const sim::KernelArgs& args) {
                std::int64_t count = static_cast<std::int64_t>(args.u[4]);
                auto xv = m.view<double>(args.u[2], static_cast<std::size_t>(count));
                auto yv = m.view<double>(args.u[3], static_cast<std::size_t>(count));
                spmv_range(*a, xv.data(), yv.data(), static_cast<std::int64_t>(args.u[0]),
                           static_cast<std::int64_t>(args.u[1]));
            });
    }

    std::memcpy(run.r, b.data(), static_cast<std::size_t>(n) * sizeof(double));
    std::memcpy(run.p, b.data(), static_cast<std::size_t>(n) * sizeof(double));
    run.rtrans = dot_range(run.r, run.r, 0, n);
    run.history.assign(static_cast<std::size_t>(iterations), 0.0);
}

// The spmv tile body for each backend. Device paths take a stream from the
// pool just long enough to enqueue. With sync_in_body the caller needs the
// result before its body continues (the monolithic loop); without it the
// ta path returns with the op in flight and dependents wait on the counter.
void spmv_body(CgRun& run, int t, bool sync_in_body) {
    const Tile& tile = run.plan[static_cast<std::size_t>(t)];
    double cost = spmv_cost(run.A, tile.r0, tile.r1);
    switch (run.opt.backend) {
    case CgBackend::host:
        exec_kernel(run, t, cost, [&run, &tile] {
            spmv_range(run.A, run.p, run.Ap, tile.r0, tile.r1);
        });
        return;
    case CgBackend::device_ta:
    case CgBackend::device_blocking: {
        sim::KernelArgs args;
        args.u = {static_cast<std::uint64_t>(tile.r0), static_cast<std::uint64_t>(tile.r1),
                  run.p_off, run.Ap_off, static_cast<std::uint64_t>(run.n)};
        args.outputs = {{run.Ap_off + static_cast<std::uint64_t>(tile.r0) * sizeof(double),
                         static_cast<std::uint64_t>(tile.r1 - tile.r0) * sizeof(double)}};
        sim::StreamId s = run.qpool->acquire();
        run.dev->enqueue_kernel(s, run.spmv_kernel, std::move(args), cost);
        sim::EventId ev = run.dev->record_event(s);
        if (run.opt.backend == CgBackend::device_blocking) {
            run.dev->wait(ev);
        } else if (sync_in_body) {
            run.ta->wait_transformed(ev);
        } else {
            run.ta->bind_event_async(ev);
        }
        run.qpool->release(s);
        return;
    }
    }
}

void spawn_iteration(Runtime& rt, CgRun& run, int iter) {
    const int T = run.opt.tiles;
    auto tag = [iter](const char* fam, int t) {
        return std::string(fam) + ":" + std::to_string(iter) + ":" + std::to_string(t);
    };
    CgRun* rp = &run;

    for (int t = 0; t < T; ++t) {
        const Tile& tile = run.plan[static_cast<std::size_t>(t)];
        TaskDef d;
        d.label = tag("spmv", t);
        d.accesses = {
            reg(run.p + tile.band_lo,
                static_cast<std::size_t>(tile.band_hi - tile.band_lo + 1) * sizeof(double),
                deps::AccessMode::read),
            reg(run.Ap + tile.r0, static_cast<std::size_t>(tile.r1 - tile.r0) * sizeof(double),
                deps::AccessMode::write),
        };
        d.body = [rp, t] { spmv_body(*rp, t, false); };
        rt.submit(std::move(d));
    }

    for (int t = 0; t < T; ++t) {
        const Tile& tile = run.plan[static_cast<std::size_t>(t)];
        std::int64_t len = tile.r1 - tile.r0;
        TaskDef d;
        d.label = tag("dot_pAp", t);
        d.accesses = {
            reg(run.p + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::read),
            reg(run.Ap + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::read),
            reg(run.pa + t, sizeof(double), deps::AccessMode::write),
        };
        d.body = [rp, t] {
            const Tile& tl = rp->plan[static_cast<std::size_t>(t)];
            double cost = dot_cost(tl.r1 - tl.r0);
            exec_kernel(*rp, t, cost,
                        [rp, t, &tl] { rp->pa[t] = dot_range(rp->p, rp->Ap, tl.r0, tl.r1); });
        };
        rt.submit(std::move(d));
    }

    {
        TaskDef d;
        d.label = tag("alpha", 0);
        d.accesses = {
            reg(run.pa, static_cast<std::size_t>(T) * sizeof(double), deps::AccessMode::read),
            reg(&run.rtrans, sizeof(double), deps::AccessMode::read),
            reg(&run.alpha, sizeof(double), deps::AccessMode::write),
        };
        d.body = [rp, T] {
            double pAp = 0;
            for (int t = 0; t < T; ++t)
                pAp += rp->pa[t];
            rp->alpha = rp->rtrans / pAp;
            this_task::advance(reduce_cost(T));
        };
        rt.submit(std::move(d));
    }

    for (int t = 0; t < T; ++t) {
        const Tile& tile = run.plan[static_cast<std::size_t>(t)];
        std::int64_t len = tile.r1 - tile.r0;
        TaskDef d;
        d.label = tag("x_up", t);
        d.accesses = {
            reg(&run.alpha, sizeof(double), deps::AccessMode::read),
            reg(run.p + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::read),
            reg(run.x + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::readwrite),
        };
        d.body = [rp, t] {
            const Tile& tl = rp->plan[static_cast<std::size_t>(t)];
            double cost = waxpby_cost(tl.r1 - tl.r0);
            exec_kernel(*rp, t, cost, [rp, &tl] {
                waxpby_range(1.0, rp->x, rp->alpha, rp->p, rp->x, tl.r0, tl.r1);
            });
        };
        rt.submit(std::move(d));
    }

    for (int t = 0; t < T; ++t) {
        const Tile& tile = run.plan[static_cast<std::size_t>(t)];
        std::int64_t len = tile.r1 - tile.r0;
        TaskDef d;
        d.label = tag("r_up", t);
        d.accesses = {
            reg(&run.alpha, sizeof(double), deps::AccessMode::read),
            reg(run.Ap + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::read),
            reg(run.r + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::readwrite),
        };
        d.body = [rp, t] {
            const Tile& tl = rp->plan[static_cast<std::size_t>(t)];
            double cost = waxpby_cost(tl.r1 - tl.r0);
            exec_kernel(*rp, t, cost, [rp, &tl] {
                waxpby_range(1.0, rp->r, -rp->alpha, rp->Ap, rp->r, tl.r0, tl.r1);
            });
        };
        rt.submit(std::move(d));
    }

    for (int t = 0; t < T; ++t) {
        const Tile& tile = run.plan[static_cast<std::size_t>(t)];
        std::int64_t len = tile.r1 - tile.r0;
        TaskDef d;
        d.label = tag("dot_rr", t);
        d.accesses = {
            reg(run.r + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::read),
            reg(run.rr + t, sizeof(double), deps::AccessMode::write),
        };
        d.body = [rp, t] {
            const Tile& tl = rp->plan[static_cast<std::size_t>(t)];
            double cost = dot_cost(tl.r1 - tl.r0);
            exec_kernel(*rp, t, cost,
                        [rp, t, &tl] { rp->rr[t] = dot_range(rp->r, rp->r, tl.r0, tl.r1); });
        };
        rt.submit(std::move(d));
    }

    {
        TaskDef d;
        d.label = tag("beta_res", 0);
        d.accesses = {
            reg(run.rr, static_cast<std::size_t>(T) * sizeof(double), deps::AccessMode::read),
            reg(&run.rtrans, sizeof(double), deps::AccessMode::readwrite),
            reg(&run.beta, sizeof(double), deps::AccessMode::write),
        };
        bool mark = run.opt.iteration_marks;
        d.body = [rp, T, iter, mark] {
            double next = 0;
            for (int t = 0; t < T; ++t)
                next += rp->rr[t];
            rp->beta = next / rp->rtrans;
            rp->rtrans = next;
            rp->history[static_cast<std::size_t>(iter)] = std::sqrt(next);
            this_task::advance(reduce_cost(T));
            if (mark)
                this_task::mark("cg_iter=" + std::to_string(iter));
        };
        rt.submit(std::move(d));
    }

    for (int t = 0; t < T; ++t) {
        const Tile& tile = run.plan[static_cast<std::size_t>(t)];
        std::int64_t len = tile.r1 - tile.r0;
        TaskDef d;
        d.label = tag("p_up", t);
        d.accesses = {
            reg(&run.beta, sizeof(double), deps::AccessMode::read),
            reg(run.r + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::read),
            reg(run.p + tile.r0, static_cast<std::size_t>(len) * sizeof(double),
                deps::AccessMode::readwrite),
        };
        d.body = [rp, t] {
            const Tile& tl = rp->plan[static_cast<std::size_t>(t)];
            double cost = waxpby_cost(tl.r1 - tl.r0);
            exec_kernel(*rp, t, cost, [rp, &tl] {
                waxpby_range(1.0, rp->r, rp->beta, rp->p, rp->p, tl.r0, tl.r1);
            });
        };
        rt.submit(std::move(d));
    }
}

CgResult collect(CgRun& run, int iterations) {
    CgResult res;
    res.residual_history = std::move(run.history);
    res.x.assign(run.x, run.x + run.n);
    res.iterations = iterations;
    res.converged = run.opt.tol > 0 && !res.residual_history.empty() &&
                    res.residual_history.back() < run.opt.tol;
    return res;
}

} // namespace

std::vector<Tile> make_tile_plan(const CsrMatrix& A, int tiles) {
    if (tiles < 1)
        throw ConfigError("tile plan needs at least one tile");
    if (tiles > A.n)
        throw ConfigError("more tiles than matrix rows");
    std::vector<Tile> plan(static_cast<std::size_t>(tiles));
    for (int t = 0; t < tiles; ++t) {
        Tile& tl = plan[static_cast<std::size_t>(t)];
        tl.r0 = A.n * t / tiles;
        tl.r1 = A.n * (t + 1) / tiles;
        tl.band_lo = A.n;
        tl.band_hi = 0;
        for (std::int64_t k = A.row_ptr[tl.r0]; k < A.row_ptr[tl.r1]; ++k) {
            tl.band_lo = std::min(tl.band_lo, A.col_idx[k]);
            tl.band_hi = std::max(tl.band_hi, A.col_idx[k]);
        }
        if (A.row_ptr[tl.r0] == A.row_ptr[tl.r1]) {
            tl.band_lo = tl.r0;
            tl.band_hi = tl.r0;
        }
    }
    return plan;
}

CgResult cg_reference(const CsrMatrix& A, const std::vector<double>& b, int iterations,
                      double tol) {
    const std::int64_t n = A.n;
    std::vector<double> x(n, 0.0), r(b), p(b), Ap(n, 0.0);
    double rtrans = dot_range(r.data(), r.data(), 0, n);
    CgResult res;
    for (int it = 0; it < iterations; ++it) {
        spmv_range(A, p.data(), Ap.data(), 0, n);
        double pAp = dot_range(p.data(), Ap.data(), 0, n);
        double alpha = rtrans / pAp;
        waxpby_range(1.0, x.data(), alpha, p.data(), x.data(), 0, n);
        waxpby_range(1.0, r.data(), -alpha, Ap.data(), r.data(), 0, n);
        double next = dot_range(r.data(), r.data(), 0, n);
        double beta = next / rtrans;
        rtrans = next;
        res.residual_history.push_back(std::sqrt(next));
        waxpby_range(1.0, r.data(), beta, p.data(), p.data(), 0, n);
    }
    res.x = std::move(x);
    res.iterations = iterations;
    res.converged = tol > 0 && !res.residual_history.empty() &&
                    res.residual_history.back() < tol;
    return res;
}

CgResult cg_monolithic(Runtime& rt, const CsrMatrix& A, const std::vector<double>& b,
                       int iterations, const CgOptions& opt) {
    CgOptions o = opt;
    o.tiles = 1;
    auto run = std::make_unique<CgRun>(A, o);
    run->plan = make_tile_plan(A, 1);
    setup_state(*run, rt, b, iterations);

    CgRun* rp = run.get();
    TaskDef d;
    d.label = "cg_monolithic";
    d.body = [rp, iterations] {
        const std::int64_t n = rp->n;
        for (int it = 0; it < iterations; ++it) {
            spmv_body(*rp, 0, true);
            exec_kernel(*rp, 0, dot_cost(n),
                        [rp, n] { rp->pa[0] = dot_range(rp->p, rp->Ap, 0, n); });
            rp->alpha = rp->rtrans / rp->pa[0];
            exec_kernel(*rp, 0, waxpby_cost(n), [rp, n] {
                waxpby_range(1.0, rp->x, rp->alpha, rp->p, rp->x, 0, n);
            });
            exec_kernel(*rp, 0, waxpby_cost(n), [rp, n] {
                waxpby_range(1.0, rp->r, -rp->alpha, rp->Ap, rp->r, 0, n);
            });
            exec_kernel(*rp, 0, dot_cost(n),
                        [rp, n] { rp->rr[0] = dot_range(rp->r, rp->r, 0, n); });
            rp->beta = rp->rr[0] / rp->rtrans;
            rp->rtrans = rp->rr[0];
            rp->history[static_cast<std::size_t>(it)] = std::sqrt(rp->rr[0]);
            if (rp->opt.iteration_marks)
                this_task::mark("cg_iter=" + std::to_string(it));
            exec_kernel(*rp, 0, waxpby_cost(n), [rp, n] {
                waxpby_range(1.0, rp->r, rp->beta, rp->p, rp->p, 0, n);
            });
        }
    };
    rt.submit(std::move(d));
    rt.run();
    return collect(*run, iterations);
}

CgResult cg_tasks(Runtime& rt, const CsrMatrix& A, const std::vector<double>& b,
                  int iterations, const CgOptions& opt) {
    auto run = std::make_unique<CgRun>(A, opt);
    run->plan = make_tile_plan(A, opt.tiles);
    setup_state(*run, rt, b, iterations);
    for (int it = 0; it < iterations; ++it)
        spawn_iteration(rt, *run, it);
    rt.run();
    return collect(*run, iterations);
}

} // namespace tw::bench
