// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"
#include "vec.hpp"

namespace flowctrl {

struct DenseMatrix {
    index_t nrows = 0;
    index_t ncols = 0;
    Vec data;  // row-major

    DenseMatrix() = default;
    DenseMatrix(index_t r, index_t c) : nrows(r), ncols(c), data(r * c, 0.0) {}

    double& operator()(index_t i, index_t j) { return data[i * ncols + j]; }
    double operator()(index_t i, index_t j) const { return data[i * ncols + j]; }

    static DenseMatrix identity(index_t n) {
        DenseMatrix m(n, n);
        for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

struct SpectrumReport {
    Vec eigenvalues;  // sorted ascending
    double min = 0.0, max = 0.0;
    double condition_number = 0.0;  // max|lambda| / min|lambda|
    index_t n_negative = 0;
};

inline DenseMatrix to_dense(const SparseMatrix& m) {
    DenseMatrix d(m.nrows, m.ncols);
    for (index_t r = 0; r < m.nrows; ++r)
        for (index_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
            d(r, m.col_idx[k]) += m.values[k];
    return d;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.ncols != b.nrows) throw DimensionError("matmul: shape");
    DenseMatrix c(a.nrows, b.ncols);
    for (index_t i = 0; i < a.nrows; ++i)
        for (index_t k = 0; k < a.ncols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (index_t j = 0; j < b.ncols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline DenseMatrix dense_transpose(const DenseMatrix& a) {
    DenseMatrix t(a.ncols, a.nrows);
    for (index_t i = 0; i < a.nrows; ++i)
        for (index_t j = 0; j < a.ncols; ++j) t(j, i) = a(i, j);
    return t;
}

inline double dense_max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

inline double dense_sym_defect(const DenseMatrix& a) {
    double m = 0.0;
    for (index_t i = 0; i < a.nrows; ++i)
        for (index_t j = i + 1; j < a.ncols; ++j) m = std::max(m, std::abs(a(i, j) - a(j, i)));
    return m;
}

struct LuFactors {
    DenseMatrix lu;
    std::vector<index_t> piv;
};

inline LuFactors lu_factor(DenseMatrix m) {
    if (m.nrows != m.ncols) throw DimensionError("lu_factor: not square");
    index_t n = m.nrows;
    double norm_inf = 0.0;
    for (index_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (index_t j = 0; j < n; ++j) s += std::abs(m(i, j));
        norm_inf = std::max(norm_inf, s);
    }
    std::vector<index_t> piv(n);
    for (index_t k = 0; k < n; ++k) {
        index_t p = k;
        for (index_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
        piv[k] = p;
        if (p != k)
            for (index_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
        if (std::abs(m(k, k)) <= 1e-14 * norm_inf) throw SingularError("lu_factor: tiny pivot");
        for (index_t i = k + 1; i < n; ++i) {
            m(i, k) /= m(k, k);
            double lik = m(i, k);
            for (index_t j = k + 1; j < n; ++j) m(i, j) -= lik * m(k, j);
        }
    }
    return {std::move(m), std::move(piv)};
}

inline Vec lu_solve(const LuFactors& f, Vec b) {
    index_t n = f.lu.nrows;
    if (static_cast<index_t>(b.size()) != n) throw DimensionError("lu_solve: rhs size");
    for (index_t k = 0; k < n; ++k)
        if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
    for (index_t i = 1; i < n; ++i)
        for (index_t j = 0; j < i; ++j) b[i] -= f.lu(i, j) * b[j];
    for (index_t i = n - 1; i >= 0; --i) {
        for (index_t j = i + 1; j < n; ++j) b[i] -= f.lu(i, j) * b[j];
        b[i] /= f.lu(i, i);
    }
    return b;
}

inline Vec dense_solve(const DenseMatrix& m, const Vec& b) { return lu_solve(lu_factor(m), b); }

// lower-triangular Cholesky factor; throws NotSpdError
inline DenseMatrix cholesky(const DenseMatrix& m) {
    if (m.nrows != m.ncols) throw DimensionError("cholesky: not square");
    index_t n = m.nrows;
    DenseMatrix l(n, n);
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (index_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw NotSpdError("cholesky: nonpositive pivot");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

inline Vec cholesky_solve(const DenseMatrix& l, Vec b) {
    index_t n = l.nrows;
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j < i; ++j) b[i] -= l(i, j) * b[j];
        b[i] /= l(i, i);
    }
    for (index_t i = n - 1; i >= 0; --i) {
        for (index_t j = i + 1; j < n; ++j) b[i] -= l(j, i) * b[j];
        b[i] /= l(i, i);
    }
    return b;
}

inline SpectrumReport spectrum_from_values(Vec ev) {
    std::sort(ev.begin(), ev.end());
    SpectrumReport r;
    r.min = ev.front();
    r.max = ev.back();
    double amax = 0.0, amin = std::numeric_limits<double>::infinity();
    for (double v : ev) {
        amax = std::max(amax, std::abs(v));
        amin = std::min(amin, std::abs(v));
        if (v < 0.0) ++r.n_negative;
    }
    r.condition_number = amin > 0.0 ? amax / amin : std::numeric_limits<double>::infinity();
    r.eigenvalues = std::move(ev);
    return r;
}

// cyclic Jacobi; optionally accumulates eigenvectors (columns of *vecs)
inline SpectrumReport sym_eig(DenseMatrix m, DenseMatrix* vecs = nullptr) {
    if (m.nrows != m.ncols) throw DimensionError("sym_eig: not square");
    double scale_ref = dense_max_abs(m);
    if (scale_ref > 0.0 && dense_sym_defect(m) > 1e-12 * scale_ref)
        throw SymmetryError("sym_eig: matrix not symmetric");
    index_t n = m.nrows;
    if (vecs) *vecs = DenseMatrix::identity(n);
    double frob = 0.0;
    for (double v : m.data) frob += v * v;
    frob = std::sqrt(frob);
    const double tol = 1e-13 * (frob > 0 ? frob : 1.0);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (index_t i = 0; i < n; ++i)
            for (index_t j = i + 1; j < n; ++j) off += 2.0 * m(i, j) * m(i, j);
        if (std::sqrt(off) <= tol) break;
        for (index_t p = 0; p < n; ++p)
            for (index_t q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (index_t k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (index_t k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                if (vecs)
                    for (index_t k = 0; k < n; ++k) {
                        double vkp = (*vecs)(k, p), vkq = (*vecs)(k, q);
                        (*vecs)(k, p) = c * vkp - s * vkq;
                        (*vecs)(k, q) = s * vkp + c * vkq;
                    }
            }
    }
    Vec ev(n);
    for (index_t i = 0; i < n; ++i) ev[i] = m(i, i);
    if (vecs) {
        // sort columns with the eigenvalues
        std::vector<index_t> order(n);
        for (index_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](index_t a, index_t b) { return ev[a] < ev[b]; });
        DenseMatrix sorted(n, n);
        for (index_t j = 0; j < n; ++j)
            for (index_t i = 0; i < n; ++i) sorted(i, j) = (*vecs)(i, order[j]);
        *vecs = std::move(sorted);
    }
    return spectrum_from_values(std::move(ev));
}

// spectrum of D^{-1} M via L^{-1} M L^{-T}, D = L L^T
inline SpectrumReport gen_sym_eig(const DenseMatrix& m, const DenseMatrix& d,
                                  DenseMatrix* vecs = nullptr) {
    if (m.nrows != m.ncols || d.nrows != d.ncols || m.nrows != d.nrows)
        throw DimensionError("gen_sym_eig: shape");
    DenseMatrix l = cholesky(d);
    index_t n = m.nrows;
    // W = L^{-1} M: solve L W = M column-wise via forward substitution on rows
    DenseMatrix w = m;
    for (index_t i = 0; i < n; ++i) {
        for (index_t k = 0; k < i; ++k) {
            double lik = l(i, k);
            if (lik == 0.0) continue;
            for (index_t j = 0; j < n; ++j) w(i, j) -= lik * w(k, j);
        }
        double lii = l(i, i);
        for (index_t j = 0; j < n; ++j) w(i, j) /= lii;
    }
    // C = W L^{-T}: solve C L^T = W, i.e. column forward substitution
    for (index_t jc = 0; jc < n; ++jc) {
        for (index_t k = 0; k < jc; ++k) {
            double ljk = l(jc, k);
            if (ljk == 0.0) continue;
            for (index_t i = 0; i < n; ++i) w(i, jc) -= ljk * w(i, k);
        }
        double ljj = l(jc, jc);
        for (index_t i = 0; i < n; ++i) w(i, jc) /= ljj;
    }
    // symmetrize against roundoff
    for (index_t i = 0; i < n; ++i)
        for (index_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (w(i, j) + w(j, i));
            w(i, j) = w(j, i) = v;
        }
    if (!vecs) return sym_eig(std::move(w));
    DenseMatrix y;
    SpectrumReport rep = sym_eig(std::move(w), &y);
    // eigenvectors of D^{-1}M are L^{-T} y
    for (index_t jc = 0; jc < n; ++jc) {
        for (index_t i = n - 1; i >= 0; --i) {
            double s = y(i, jc);
            for (index_t k = i + 1; k < n; ++k) s -= l(k, i) * y(k, jc);
            y(i, jc) = s / l(i, i);
        }
    }
    *vecs = std::move(y);
    return rep;
}

}  // namespace flowctrl
