#include "taskweave/kernels.hpp"

namespace tw::bench {

void spmv_range(const CsrMatrix& A, const double* x, double* y, std::int64_t r0,
                std::int64_t r1) {
    for (std::int64_t i = r0; i < r1; ++i) {
        double acc = 0.0;
        for (std::int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            acc += A.values[k] * x[A.col_idx[k]];
        y[i] = acc;
    }
}

double dot_range(const double* a, const double* b, std::int64_t i0, std::int64_t i1) {
    double acc = 0.0;
    for (std::int64_t i = i0; i < i1; ++i)
        acc += a[i] * b[i];
    return acc;
}

void waxpby_range(double alpha, const double* x, double beta, const double* y, double* w,
                  std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i)
        w[i] = alpha * x[i] + beta * y[i];
}

double spmv_cost(const CsrMatrix& A, std::int64_t r0, std::int64_t r1) {
    // values + col_idx per entry, x gather + y store + row_ptr per row
    std::int64_t entries = A.row_ptr[r1] - A.row_ptr[r0];
    double bytes = static_cast<double>(entries) * 24.0 + static_cast<double>(r1 - r0) * 16.0;
    return bytes / kBytesPerCostUnit;
}

double dot_cost(std::int64_t elems) {
    return static_cast<double>(elems) * 16.0 / kBytesPerCostUnit;
}

double waxpby_cost(std::int64_t elems) {
    return static_cast<double>(elems) * 24.0 / kBytesPerCostUnit;
}

double reduce_cost(std::int64_t partials) {
    return static_cast<double>(partials) * 16.0 / kBytesPerCostUnit;
}

} // namespace tw::bench
