#pragma once

// Independent reference computations the tests freeze their expectations
// against. Everything here is deliberately brute force and shares no code
// with the library: edges from a byte-granular replay instead of an interval
// ledger, multideps from nested loops instead of affine expansion, stencil
// rows from neighbor walks instead of CSR assembly.

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "taskweave/access.hpp"
#include "taskweave/types.hpp"

namespace oracle {

using tw::TaskId;
using tw::deps::AccessMode;
using tw::deps::AccessRegion;

// Sequential replay over a byte map. A task's predecessors are the last
// writer of any byte it touches plus, for its written bytes, every reader
// since that write; its own regions never feed back into its predecessor
// set. Mirrors the registration contract, not the implementation.
inline std::set<std::pair<TaskId, TaskId>>
replay_edges(const std::vector<std::pair<TaskId, std::vector<AccessRegion>>>& seq) {
    std::map<std::uint64_t, TaskId> last_writer;
    std::map<std::uint64_t, std::set<TaskId>> readers;
    std::set<std::pair<TaskId, TaskId>> edges;
    for (const auto& [id, regions] : seq) {
        std::set<TaskId> preds;
        for (const AccessRegion& r : regions)
            for (std::uint64_t b = r.base; b < r.end(); ++b) {
                auto w = last_writer.find(b);
                if (w != last_writer.end())
                    preds.insert(w->second);
                if (r.mode != AccessMode::read) {
                    auto rd = readers.find(b);
                    if (rd != readers.end())
                        preds.insert(rd->second.begin(), rd->second.end());
                }
            }
        for (const AccessRegion& r : regions)
            for (std::uint64_t b = r.base; b < r.end(); ++b) {
                if (r.mode != AccessMode::read) {
                    last_writer[b] = id;
                    readers[b].clear();
                } else {
                    readers[b].insert(id);
                }
            }
        preds.erase(id);
        for (TaskId p : preds)
            edges.emplace(p, id);
    }
    return edges;
}

// Nested-loop multidependency enumeration, up to three dims.
inline std::vector<AccessRegion> enumerate_multidep(const tw::deps::MultidepTemplate& t) {
    std::vector<AccessRegion> out;
    auto emit = [&](std::int64_t off) {
        out.push_back({static_cast<std::uint64_t>(off), t.length, t.mode});
    };
    const auto& d = t.dims;
    if (d.size() == 1) {
        for (std::int64_t i = d[0].begin; i < d[0].end; i += d[0].step)
            emit(t.offset + t.coeffs[0] * i);
    } else if (d.size() == 2) {
        for (std::int64_t i = d[0].begin; i < d[0].end; i += d[0].step)
            for (std::int64_t j = d[1].begin; j < d[1].end; j += d[1].step)
                emit(t.offset + t.coeffs[0] * i + t.coeffs[1] * j);
    } else if (d.size() == 3) {
        for (std::int64_t i = d[0].begin; i < d[0].end; i += d[0].step)
            for (std::int64_t j = d[1].begin; j < d[1].end; j += d[1].step)
                for (std::int64_t k = d[2].begin; k < d[2].end; k += d[2].step)
                    emit(t.offset + t.coeffs[0] * i + t.coeffs[1] * j + t.coeffs[2] * k);
    }
    return out;
}

// 27-point stencil row by explicit neighbor walk: the row for cell (x,y,z)
// has one entry per in-bounds (dx,dy,dz) neighbor, value -1.0, plus the
// diagonal 27.0.
struct StencilEntry {
    std::int64_t col;
    double value;
};

inline std::vector<StencilEntry> stencil_row(std::int64_t nx, std::int64_t ny,
                                             std::int64_t nz, std::int64_t x, std::int64_t y,
                                             std::int64_t z) {
    std::vector<StencilEntry> row;
    for (std::int64_t dz = -1; dz <= 1; ++dz)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                std::int64_t cx = x + dx, cy = y + dy, cz = z + dz;
                if (cx < 0 || cx >= nx || cy < 0 || cy >= ny || cz < 0 || cz >= nz)
                    continue;
                std::int64_t col = (cz * ny + cy) * nx + cx;
                bool self = dx == 0 && dy == 0 && dz == 0;
                row.push_back({col, self ? 27.0 : -1.0});
            }
    return row;
}

// Dense mat-vec for small hand matrices.
inline std::vector<double> dense_matvec(const std::vector<std::vector<double>>& m,
                                        const std::vector<double>& x) {
    std::vector<double> y(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            y[i] += m[i][j] * x[j];
    return y;
}

// Oversubscription slowdown when every registered pool thread counts against
// the cores and the penalty is charged per quantum.
inline double contention_factor(unsigned total_threads, unsigned cores, double penalty,
                                double quantum) {
    if (total_threads <= cores)
        return 1.0;
    return (static_cast<double>(total_threads) / cores) * (1.0 + penalty / quantum);
}

// FIFO stream timing: operation k starts when both its enqueue time and the
// stream tail have passed, pays the launch overhead, and completes after its
// duration.
struct StreamOp {
    double enqueue;
    double duration;
};

inline std::vector<std::pair<double, double>>
stream_schedule(const std::vector<StreamOp>& ops, double launch_overhead) {
    std::vector<std::pair<double, double>> out;
    double tail = 0;
    for (const StreamOp& op : ops) {
        double start = (op.enqueue > tail ? op.enqueue : tail) + launch_overhead;
        double completion = start + op.duration;
        out.emplace_back(start, completion);
        tail = completion;
    }
    return out;
}

} // namespace oracle
