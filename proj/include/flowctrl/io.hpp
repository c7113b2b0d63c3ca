// SPDX-License-Identifier: MIT
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mesh.hpp"
#include "sparse.hpp"
#include "vec.hpp"

namespace flowctrl {

// MatrixMarket coordinate format, real general, 1-based indices
inline void write_matrix_market(const std::string& path, const SparseMatrix& m) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "%%MatrixMarket matrix coordinate real general\n";
    index_t nnz = static_cast<index_t>(m.values.size());
    f << m.nrows << " " << m.ncols << " " << nnz << "\n";
    char buf[96];
    for (index_t r = 0; r < m.nrows; ++r)
        for (index_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", (long long)(r + 1),
                          (long long)(m.col_idx[k] + 1), m.values[k]);
            f << buf;
        }
    if (!f) throw IoError("write failed: " + path);
}

inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw IoError("not a MatrixMarket file: " + path);
    if (line.find("coordinate") == std::string::npos ||
        line.find("real") == std::string::npos ||
        line.find("general") == std::string::npos)
        throw IoError("unsupported MatrixMarket variant: " + path);
    while (std::getline(f, line))
        if (!line.empty() && line[0] != '%') break;
    index_t nr = 0, nc = 0, nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nr >> nc >> nnz)) throw IoError("bad MatrixMarket size line: " + path);
    }
    std::vector<Triplet> t;
    t.reserve(nnz);
    for (index_t k = 0; k < nnz; ++k) {
        index_t i, j;
        double v;
        if (!(f >> i >> j >> v)) throw IoError("truncated MatrixMarket data: " + path);
        if (i < 1 || i > nr || j < 1 || j > nc)
            throw IoError("MatrixMarket index out of range: " + path);
        t.push_back({i - 1, j - 1, v});
    }
    return from_triplets(nr, nc, std::move(t));
}

// dense vector as MatrixMarket array format
inline void write_vector_market(const std::string& path, const Vec& v) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "%%MatrixMarket matrix array real general\n";
    f << v.size() << " 1\n";
    char buf[32];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

inline Vec read_vector_market(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("%%MatrixMarket", 0) != 0 ||
        line.find("array") == std::string::npos)
        throw IoError("not a MatrixMarket array file: " + path);
    while (std::getline(f, line))
        if (!line.empty() && line[0] != '%') break;
    index_t nr = 0, nc = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nr >> nc) || nc != 1) throw IoError("bad array size line: " + path);
    }
    Vec v(nr);
    for (index_t i = 0; i < nr; ++i)
        if (!(f >> v[i])) throw IoError("truncated array data: " + path);
    return v;
}

// rows of comma-separated values under a header line
inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<Vec>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << header << "\n";
    char buf[32];
    for (const Vec& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.12g", r[j]);
            f << (j ? "," : "") << buf;
        }
        f << "\n";
    }
    if (!f) throw IoError("write failed: " + path);
}

// dimension / nnz summary of named matrices
inline void write_matrix_summary_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, const SparseMatrix*>>& mats) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "name,rows,cols,nnz\n";
    for (const auto& [name, m] : mats)
        f << name << "," << m->nrows << "," << m->ncols << "," << m->values.size() << "\n";
    if (!f) throw IoError("write failed: " + path);
}

// Legacy-VTK structured points on the Q1 grid: velocity sampled at the Q1
// nodes (every second Q2 node per direction), pressure directly.
inline void write_vtk_fields(const std::string& path, const ChannelMesh& m, const Vec& vx,
                             const Vec& vy, const Vec& p) {
    if (static_cast<index_t>(vx.size()) != m.n_scalar ||
        static_cast<index_t>(vy.size()) != m.n_scalar ||
        static_cast<index_t>(p.size()) != m.n_p)
        throw DimensionError("write_vtk_fields: field sizes");
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "# vtk DataFile Version 3.0\n";
    f << "channel flow control fields\n";
    f << "ASCII\n";
    f << "DATASET STRUCTURED_POINTS\n";
    f << "DIMENSIONS " << m.nq1 << " " << m.nq1 << " 1\n";
    f << "ORIGIN -1 -1 0\n";
    f << "SPACING " << m.h << " " << m.h << " 1\n";
    f << "POINT_DATA " << m.n_p << "\n";
    f << "VECTORS velocity double\n";
    char buf[96];
    for (index_t iy = 0; iy < m.nq1; ++iy)
        for (index_t ix = 0; ix < m.nq1; ++ix) {
            index_t q2 = 2 * iy * m.nq2 + 2 * ix;
            std::snprintf(buf, sizeof buf, "%.12g %.12g 0\n", vx[q2], vy[q2]);
            f << buf;
        }
    f << "SCALARS pressure double 1\n";
    f << "LOOKUP_TABLE default\n";
    for (index_t i = 0; i < m.n_p; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g\n", p[i]);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace flowctrl
