#pragma once

#include "taskweave/csr.hpp"

namespace tw::bench {

// The CG kernel triad over half-open row/index ranges. Pure over their
// ranges; tiled calls over a disjoint partition reproduce the full-range
// call bit for bit (dot excepted: partials must be summed in tile order).
void spmv_range(const CsrMatrix& A, const double* x, double* y, std::int64_t r0,
                std::int64_t r1);
double dot_range(const double* a, const double* b, std::int64_t i0, std::int64_t i1);
// w = alpha*x + beta*y over [i0, i1)
void waxpby_range(double alpha, const double* x, double beta, const double* y, double* w,
                  std::int64_t i0, std::int64_t i1);

// Virtual-cost model: one cost unit per 64 bytes a kernel touches, so task
// duration tracks tile size and shrinking tiles shrinks the critical path.
inline constexpr double kBytesPerCostUnit = 64.0;

double spmv_cost(const CsrMatrix& A, std::int64_t r0, std::int64_t r1);
double dot_cost(std::int64_t elems);
double waxpby_cost(std::int64_t elems);
double reduce_cost(std::int64_t partials);

} // namespace tw::bench
