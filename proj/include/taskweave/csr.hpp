#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace tw::bench {

struct CsrMatrix {
    std::int64_t n = 0;
    std::vector<std::int64_t> row_ptr; // n+1 offsets
    std::vector<std::int64_t> col_idx;
    std::vector<double> values;

    std::int64_t nnz() const { return row_ptr.empty() ? 0 : row_ptr.back(); }
    void validate() const; // invariants above; violation -> error
};

// 27-point stencil on an nx*ny*nz grid: diagonal 27.0, in-bounds neighbors
// -1.0. Strictly diagonally dominant, hence symmetric positive definite;
// every row sums to at least 1 (interior rows exactly 1).
CsrMatrix gen_stencil_matrix(std::int64_t nx, std::int64_t ny, std::int64_t nz);

// Text serialization: a header line, then n and nnz, then one line each for
// row_ptr, col_idx, values (full double precision). Round-trips exactly.
void dump_csr(const CsrMatrix& m, std::ostream& os);
CsrMatrix load_csr(std::istream& is);

} // namespace tw::bench
