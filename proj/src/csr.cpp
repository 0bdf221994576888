#include "taskweave/csr.hpp"

#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "taskweave/types.hpp"

namespace tw::bench {

void CsrMatrix::validate() const {
    if (n < 0 || row_ptr.size() != static_cast<std::size_t>(n) + 1)
        throw ConfigError("csr: row_ptr must hold n+1 offsets");
    if (row_ptr.front() != 0)
        throw ConfigError("csr: row_ptr must start at 0");
    for (std::int64_t i = 0; i < n; ++i)
        if (row_ptr[i] > row_ptr[i + 1])
            throw ConfigError("csr: row_ptr decreases at row " + std::to_string(i));
    if (col_idx.size() != values.size() ||
        col_idx.size() != static_cast<std::size_t>(row_ptr.back()))
        throw ConfigError("csr: row_ptr[n] disagrees with stored entries");
    for (std::int64_t c : col_idx)
        if (c < 0 || c >= n)
            throw ConfigError("csr: column index " + std::to_string(c) + " out of range");
}

CsrMatrix gen_stencil_matrix(std::int64_t nx, std::int64_t ny, std::int64_t nz) {
    if (nx < 1 || ny < 1 || nz < 1)
        throw ConfigError("stencil dims must be at least 1");
    __int128 cells = static_cast<__int128>(nx) * ny * nz;
    if (cells * 27 > std::numeric_limits<std::int64_t>::max() / 8)
        throw ConfigError("stencil dims overflow");

    CsrMatrix m;
    m.n = static_cast<std::int64_t>(cells);
    m.row_ptr.reserve(m.n + 1);
    m.row_ptr.push_back(0);
    m.col_idx.reserve(static_cast<std::size_t>(m.n) * 27);
    m.values.reserve(static_cast<std::size_t>(m.n) * 27);

    for (std::int64_t z = 0; z < nz; ++z)
        for (std::int64_t y = 0; y < ny; ++y)
            for (std::int64_t x = 0; x < nx; ++x) {
                for (std::int64_t dz = -1; dz <= 1; ++dz)
                    for (std::int64_t dy = -1; dy <= 1; ++dy)
                        for (std::int64_t dx = -1; dx <= 1; ++dx) {
                            std::int64_t cx = x + dx, cy = y + dy, cz = z + dz;
                            if (cx < 0 || cx >= nx || cy < 0 || cy >= ny || cz < 0 ||
                                cz >= nz)
                                continue;
                            m.col_idx.push_back((cz * ny + cy) * nx + cx);
                            m.values.push_back(dx == 0 && dy == 0 && dz == 0 ? 27.0 : -1.0);
                        }
                m.row_ptr.push_back(static_cast<std::int64_t>(m.col_idx.size()));
            }
    return m;
}

void dump_csr(const CsrMatrix& m, std::ostream& os) {
    os << "# taskweave csr v1\n";
    os << m.n << ' ' << m.nnz() << '\n';
    auto line = [&os](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i)
            os << (i ? " " : "") << v[i];
        os << '\n';
    };
    std::streamsize p = os.precision(17);
    line(m.row_ptr);
    line(m.col_idx);
    line(m.values);
    os.precision(p);
}

CsrMatrix load_csr(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header != "# taskweave csr v1")
        throw ConfigError("csr load: missing 'taskweave csr v1' header");
    CsrMatrix m;
    std::int64_t nnz = 0;
    if (!(is >> m.n >> nnz))
        throw ConfigError("csr load: bad size line");
    m.row_ptr.resize(m.n + 1);
    m.col_idx.resize(nnz);
    m.values.resize(nnz);
    for (auto& v : m.row_ptr)
        if (!(is >> v))
            throw ConfigError("csr load: truncated row_ptr");
    for (auto& v : m.col_idx)
        if (!(is >> v))
            throw ConfigError("csr load: truncated col_idx");
    for (auto& v : m.values)
        if (!(is >> v))
            throw ConfigError("csr load: truncated values");
    m.validate();
    return m;
}

} // namespace tw::bench
