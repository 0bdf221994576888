#pragma once

#include <cstdint>
#include <vector>

#include "taskweave/csr.hpp"
#include "taskweave/legacy_pool.hpp"
#include "taskweave/runtime.hpp"

namespace tw::bench {

struct CgResult {
    std::vector<double> residual_history; // sqrt(r*r) after each iteration
    std::vector<double> x;
    int iterations = 0;
    bool converged = false; // meaningful only with tol > 0
};

// Plain sequential solver, no runtime involved: the numerical oracle every
// variant must match.
CgResult cg_reference(const CsrMatrix& A, const std::vector<double>& b, int iterations,
                      double tol = 0.0);

enum class CgBackend {
    host,            // kernels on the workers
    device_ta,       // spmv on the device, events bound to the task counter
    device_blocking, // spmv on the device, worker blocks on the event
};

// How host kernel work executes: inline on the worker, farmed to legacy
// pools (the oversubscription pathology), or spawned as substrate subtasks
// (the unified mitigation).
enum class KernelPlacement { inline_exec, pooled, subtask };

struct CgOptions {
    int tiles = 16;
    CgBackend backend = CgBackend::host;
    KernelPlacement placement = KernelPlacement::inline_exec;
    std::vector<pool::LegacyPool*> pools; // pooled placement round-robins these
    unsigned stream_pool_capacity = 4;    // device backends
    bool iteration_marks = true;
    double tol = 0.0;
};

// One task runs the whole solve, kernels dispatched per `placement`.
CgResult cg_monolithic(Runtime& rt, const CsrMatrix& A, const std::vector<double>& b,
                       int iterations, const CgOptions& opt);

// Data-flow decomposition: per iteration, spmv/dot/update tiles plus two
// reduction tasks, ordered purely by region conflicts. Iterations are
// spawned up front and pipeline without barriers.
CgResult cg_tasks(Runtime& rt, const CsrMatrix& A, const std::vector<double>& b,
                  int iterations, const CgOptions& opt);

struct Tile {
    std::int64_t r0 = 0, r1 = 0;
    std::int64_t band_lo = 0, band_hi = 0; // column span the tile's rows touch
};

// Equal row blocks; each tile carries the column band its spmv reads so the
// declared read region covers exactly the touched stretch of the vector.
std::vector<Tile> make_tile_plan(const CsrMatrix& A, int tiles);

} // namespace tw::bench
