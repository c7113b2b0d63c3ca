// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "vec.hpp"

namespace flowctrl {

// Compressed sparse row matrix. Column indices strictly increasing within each
// row; duplicates coalesced by summation at build time. Explicit zeros are kept
// (fill-drop and Dirichlet modification rely on pattern stability).
struct SparseMatrix {
    index_t nrows = 0;
    index_t ncols = 0;
    std::vector<index_t> row_ptr;  // len nrows+1
    std::vector<index_t> col_idx;
    std::vector<double> values;

    SparseMatrix() = default;
    SparseMatrix(index_t r, index_t c) : nrows(r), ncols(c), row_ptr(r + 1, 0) {}

    index_t nnz() const { return static_cast<index_t>(col_idx.size()); }

    static SparseMatrix identity(index_t n) {
        SparseMatrix m(n, n);
        m.col_idx.resize(n);
        m.values.assign(n, 1.0);
        for (index_t i = 0; i < n; ++i) {
            m.row_ptr[i] = i;
            m.col_idx[i] = i;
        }
        m.row_ptr[n] = n;
        return m;
    }
};

struct Triplet {
    index_t row, col;
    double value;
};

inline SparseMatrix from_triplets(index_t nrows, index_t ncols, std::vector<Triplet> t) {
    for (const auto& e : t)
        if (e.row < 0 || e.row >= nrows || e.col < 0 || e.col >= ncols)
            throw DimensionError("from_triplets: entry out of range");
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix m(nrows, ncols);
    m.col_idx.reserve(t.size());
    m.values.reserve(t.size());
    std::vector<index_t> row_counts(nrows, 0);
    std::size_t i = 0;
    while (i < t.size()) {
        index_t r = t[i].row, c = t[i].col;
        double s = 0.0;
        while (i < t.size() && t[i].row == r && t[i].col == c) s += t[i++].value;
        m.col_idx.push_back(c);
        m.values.push_back(s);
        ++row_counts[r];
    }
    for (index_t r = 0; r < nrows; ++r) m.row_ptr[r + 1] = m.row_ptr[r] + row_counts[r];
    return m;
}

inline void spmv(const SparseMatrix& m, const Vec& x, Vec& y, bool transpose = false) {
    if (!transpose) {
        if (static_cast<index_t>(x.size()) != m.ncols) throw DimensionError("spmv: x size");
        y.assign(m.nrows, 0.0);
        for (index_t r = 0; r < m.nrows; ++r) {
            double s = 0.0;
            for (index_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
                s += m.values[k] * x[m.col_idx[k]];
            y[r] = s;
        }
    } else {
        if (static_cast<index_t>(x.size()) != m.nrows) throw DimensionError("spmv^T: x size");
        y.assign(m.ncols, 0.0);
        for (index_t r = 0; r < m.nrows; ++r) {
            double xr = x[r];
            if (xr == 0.0) continue;
            for (index_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
                y[m.col_idx[k]] += m.values[k] * xr;
        }
    }
}

inline Vec spmv(const SparseMatrix& m, const Vec& x, bool transpose = false) {
    Vec y;
    spmv(m, x, y, transpose);
    return y;
}

inline SparseMatrix transpose(const SparseMatrix& m) {
    SparseMatrix t(m.ncols, m.nrows);
    std::vector<index_t> counts(m.ncols, 0);
    for (index_t k = 0; k < m.nnz(); ++k) ++counts[m.col_idx[k]];
    for (index_t c = 0; c < m.ncols; ++c) t.row_ptr[c + 1] = t.row_ptr[c] + counts[c];
    t.col_idx.resize(m.nnz());
    t.values.resize(m.nnz());
    std::vector<index_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (index_t r = 0; r < m.nrows; ++r)
        for (index_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            index_t pos = next[m.col_idx[k]]++;
            t.col_idx[pos] = r;
            t.values[pos] = m.values[k];
        }
    return t;
}

// c1*a + c2*b with pattern union
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double c1 = 1.0,
                        double c2 = 1.0) {
    if (a.nrows != b.nrows || a.ncols != b.ncols) throw DimensionError("add: shape mismatch");
    SparseMatrix m(a.nrows, a.ncols);
    for (index_t r = 0; r < a.nrows; ++r) {
        index_t ka = a.row_ptr[r], kb = b.row_ptr[r];
        while (ka < a.row_ptr[r + 1] || kb < b.row_ptr[r + 1]) {
            index_t ca = ka < a.row_ptr[r + 1] ? a.col_idx[ka] : a.ncols;
            index_t cb = kb < b.row_ptr[r + 1] ? b.col_idx[kb] : b.ncols;
            if (ca < cb) {
                m.col_idx.push_back(ca);
                m.values.push_back(c1 * a.values[ka++]);
            } else if (cb < ca) {
                m.col_idx.push_back(cb);
                m.values.push_back(c2 * b.values[kb++]);
            } else {
                m.col_idx.push_back(ca);
                m.values.push_back(c1 * a.values[ka++] + c2 * b.values[kb++]);
            }
        }
        m.row_ptr[r + 1] = static_cast<index_t>(m.col_idx.size());
    }
    return m;
}

inline SparseMatrix scaled(SparseMatrix m, double c) {
    for (double& v : m.values) v *= c;
    return m;
}

inline SparseMatrix symmetric_part(const SparseMatrix& m) {
    return add(m, transpose(m), 0.5, 0.5);
}

inline Vec diagonal(const SparseMatrix& m) {
    Vec d(std::min(m.nrows, m.ncols), 0.0);
    for (index_t r = 0; r < static_cast<index_t>(d.size()); ++r)
        for (index_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
            if (m.col_idx[k] == r) d[r] = m.values[k];
    return d;
}

// rows[i] (and the matching columns) picked in the given order
inline SparseMatrix submatrix(const SparseMatrix& m, const std::vector<index_t>& rows,
                              const std::vector<index_t>& cols) {
    std::vector<index_t> colmap(m.ncols, -1);
    for (std::size_t j = 0; j < cols.size(); ++j) colmap[cols[j]] = static_cast<index_t>(j);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (index_t k = m.row_ptr[rows[i]]; k < m.row_ptr[rows[i] + 1]; ++k) {
            index_t j = colmap[m.col_idx[k]];
            if (j >= 0) t.push_back({static_cast<index_t>(i), j, m.values[k]});
        }
    return from_triplets(static_cast<index_t>(rows.size()), static_cast<index_t>(cols.size()),
                         std::move(t));
}

// symmetric permutation: result(i,j) = m(perm[i], perm[j])
inline SparseMatrix permute_symmetric(const SparseMatrix& m, const std::vector<index_t>& perm) {
    if (m.nrows != m.ncols || static_cast<index_t>(perm.size()) != m.nrows)
        throw DimensionError("permute_symmetric: shape");
    return submatrix(m, perm, perm);
}

struct BlockEntry {
    index_t row_off, col_off;
    const SparseMatrix* block;
    double scale = 1.0;
    bool transposed = false;
};

inline SparseMatrix compose_blocks(index_t nrows, index_t ncols,
                                   const std::vector<BlockEntry>& blocks) {
    std::vector<Triplet> t;
    for (const auto& e : blocks) {
        const SparseMatrix& b = *e.block;
        for (index_t r = 0; r < b.nrows; ++r)
            for (index_t k = b.row_ptr[r]; k < b.row_ptr[r + 1]; ++k) {
                index_t i = e.transposed ? b.col_idx[k] : r;
                index_t j = e.transposed ? r : b.col_idx[k];
                t.push_back({e.row_off + i, e.col_off + j, e.scale * b.values[k]});
            }
    }
    return from_triplets(nrows, ncols, std::move(t));
}

inline double max_abs(const SparseMatrix& m) {
    double mx = 0.0;
    for (double v : m.values) mx = std::max(mx, std::abs(v));
    return mx;
}

inline double symmetry_defect(const SparseMatrix& m) {
    SparseMatrix d = add(m, transpose(m), 1.0, -1.0);
    return max_abs(d);
}

// zero rows and columns in mask, put 1 on the diagonal there
inline SparseMatrix dirichlet_modify(const SparseMatrix& m, const std::vector<bool>& mask) {
    if (m.nrows != m.ncols || static_cast<index_t>(mask.size()) != m.nrows)
        throw DimensionError("dirichlet_modify: shape");
    SparseMatrix r = m;
    for (index_t i = 0; i < r.nrows; ++i)
        for (index_t k = r.row_ptr[i]; k < r.row_ptr[i + 1]; ++k) {
            index_t j = r.col_idx[k];
            if (mask[i] || mask[j]) r.values[k] = (i == j) ? 1.0 : 0.0;
        }
    // ensure unit diagonal exists for masked rows missing a stored diagonal
    for (index_t i = 0; i < r.nrows; ++i) {
        if (!mask[i]) continue;
        bool found = false;
        for (index_t k = r.row_ptr[i]; k < r.row_ptr[i + 1]; ++k)
            if (r.col_idx[k] == i) found = true;
        if (!found) {
            SparseMatrix eye(r.nrows, r.ncols);
            std::vector<Triplet> t;
            for (index_t q = 0; q < r.nrows; ++q)
                if (mask[q]) t.push_back({q, q, 0.0});
            eye = from_triplets(r.nrows, r.ncols, t);
            r = add(r, eye);
            for (index_t q = 0; q < r.nrows; ++q) {
                if (!mask[q]) continue;
                for (index_t k = r.row_ptr[q]; k < r.row_ptr[q + 1]; ++k)
                    if (r.col_idx[k] == q) r.values[k] = 1.0;
            }
            return r;
        }
    }
    return r;
}

// zero the rows in mask (no diagonal fix), for rectangular coupling blocks
inline SparseMatrix zero_rows(SparseMatrix m, const std::vector<bool>& mask) {
    for (index_t i = 0; i < m.nrows; ++i)
        if (mask[i])
            for (index_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) m.values[k] = 0.0;
    return m;
}

inline SparseMatrix zero_cols(SparseMatrix m, const std::vector<bool>& mask) {
    for (index_t k = 0; k < m.nnz(); ++k)
        if (mask[m.col_idx[k]]) m.values[k] = 0.0;
    return m;
}

}  // namespace flowctrl
