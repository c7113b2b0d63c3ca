// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "dense.hpp"
#include "kkt.hpp"
#include "precond.hpp"
#include "solver.hpp"

namespace flowctrl {

// dense conversions are refused above this dimension
inline constexpr index_t kDenseCap = 6000;

namespace detail {

inline void check_cap(index_t n) {
    if (n > kDenseCap) throw CapError("analysis: dense dimension cap exceeded");
}

// dense matrix of a linear operator, column by column
inline DenseMatrix operator_to_dense(const LinOp& op, index_t n) {
    DenseMatrix d(n, n);
    Vec e(n, 0.0);
    for (index_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vec c = op(e);
        for (index_t i = 0; i < n; ++i) d(i, j) = c[i];
        e[j] = 0.0;
    }
    return d;
}

inline DenseMatrix dense_inverse(const DenseMatrix& m) {
    LuFactors f = lu_factor(m);
    index_t n = m.nrows;
    DenseMatrix inv(n, n);
    Vec e(n, 0.0);
    for (index_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vec c = lu_solve(f, e);
        for (index_t i = 0; i < n; ++i) inv(i, j) = c[i];
        e[j] = 0.0;
    }
    return inv;
}

inline void symmetrize(DenseMatrix& m) {
    for (index_t i = 0; i < m.nrows; ++i)
        for (index_t j = i + 1; j < m.ncols; ++j)
            m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
}

inline DenseMatrix blkdiag2(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix d(a.nrows + b.nrows, a.ncols + b.ncols);
    for (index_t i = 0; i < a.nrows; ++i)
        for (index_t j = 0; j < a.ncols; ++j) d(i, j) = a(i, j);
    for (index_t i = 0; i < b.nrows; ++i)
        for (index_t j = 0; j < b.ncols; ++j) d(a.nrows + i, a.ncols + j) = b(i, j);
    return d;
}

// vector-valued blocks of a KKT system as dense matrices
inline DenseMatrix dense_f_vec(const KktSystem& k) {
    DenseMatrix f = to_dense(k.F_s);
    return blkdiag2(f, f);
}

// saddle operator K = [F B^T; B 0] on (velocity, pressure)
inline DenseMatrix dense_saddle(const KktSystem& k) {
    DenseMatrix fv = dense_f_vec(k);
    DenseMatrix b = to_dense(k.B);
    index_t n = k.n_v + k.n_p;
    DenseMatrix s(n, n);
    for (index_t i = 0; i < k.n_v; ++i)
        for (index_t j = 0; j < k.n_v; ++j) s(i, j) = fv(i, j);
    for (index_t i = 0; i < k.n_p; ++i)
        for (index_t j = 0; j < k.n_v; ++j) {
            s(k.n_v + i, j) = b(i, j);
            s(j, k.n_v + i) = b(i, j);
        }
    return s;
}

// S_tilde = K Q^{-1} K^T with Q = blkdiag(Q_v, alpha Q_p)
inline DenseMatrix dense_schur_tilde(const KktSystem& k) {
    DenseMatrix sk = dense_saddle(k);
    DenseMatrix qv = to_dense(k.Qv_s);
    DenseMatrix q = blkdiag2(blkdiag2(qv, qv), to_dense(k.Qp));
    for (index_t i = k.n_v; i < k.n_v + k.n_p; ++i)
        for (index_t j = k.n_v; j < k.n_v + k.n_p; ++j) q(i, j) *= k.alpha;
    // X = Q^{-1} K^T via Cholesky solves, S = K X
    DenseMatrix l = cholesky(q);
    index_t n = sk.nrows;
    DenseMatrix x(n, n);
    for (index_t j = 0; j < n; ++j) {
        Vec col(n);
        for (index_t i = 0; i < n; ++i) col[i] = sk(j, i);  // row j of K = col j of K^T
        col = cholesky_solve(l, std::move(col));
        for (index_t i = 0; i < n; ++i) x(i, j) = col[i];
    }
    DenseMatrix s = matmul(sk, x);
    symmetrize(s);
    return s;
}

// rank-n_u drop term L = Qhat_e Q_u^{-1} Qhat_e^T on (velocity, pressure) rows
inline DenseMatrix dense_drop_term(const KktSystem& k) {
    DenseMatrix qh = to_dense(k.Qhat_v);
    DenseMatrix qu = to_dense(k.Qu_s);
    DenseMatrix quv = blkdiag2(qu, qu);
    DenseMatrix l = cholesky(quv);
    index_t n = k.n_v + k.n_p;
    DenseMatrix x(k.n_u, k.n_v);
    for (index_t j = 0; j < k.n_v; ++j) {
        Vec col(k.n_u);
        for (index_t i = 0; i < k.n_u; ++i) col[i] = qh(j, i);
        col = cholesky_solve(l, std::move(col));
        for (index_t i = 0; i < k.n_u; ++i) x(i, j) = col[i];
    }
    DenseMatrix d(n, n);
    for (index_t i = 0; i < k.n_v; ++i)
        for (index_t j = 0; j < k.n_v; ++j) {
            double s = 0.0;
            for (index_t m = 0; m < k.n_u; ++m) s += qh(i, m) * x(m, j);
            d(i, j) = s;
        }
    symmetrize(d);
    return d;
}

}  // namespace detail

enum class MassKind { Qv, Qp, Qu };

// spectrum of M_C^{-1} Q where M_C is the matrix inverted by cheb_steps
// Chebyshev semi-iterations; cheb_steps = 0 is the exact-inverse stand-in
inline SpectrumReport mass_spectrum_report(MassKind which, int level, int cheb_steps) {
    ChannelMesh m(level);
    SparseMatrix q;
    double lo = 0.0, hi = 0.0;
    switch (which) {
        case MassKind::Qv:
            q = assemble_stokes_blocks(m).Qv_s;
            lo = MassBounds::qv_lo;
            hi = MassBounds::qv_hi;
            break;
        case MassKind::Qp:
            q = assemble_stokes_blocks(m).Qp;
            lo = MassBounds::qp_lo;
            hi = MassBounds::qp_hi;
            break;
        case MassKind::Qu:
            q = assemble_control_blocks(m).Qu_s;
            lo = MassBounds::qu_lo;
            hi = MassBounds::qu_hi;
            break;
    }
    detail::check_cap(q.nrows);
    DenseMatrix qd = to_dense(q);
    if (cheb_steps == 0) return gen_sym_eig(qd, qd);
    ChebyshevOp cheb(q, {cheb_steps, lo, hi});
    DenseMatrix cinv = detail::operator_to_dense(
        [&cheb](const Vec& r) { return cheb.apply(r); }, q.nrows);
    DenseMatrix mc = detail::dense_inverse(cinv);
    detail::symmetrize(mc);
    return gen_sym_eig(qd, mc);
}

struct InterlacingReport {
    Vec eigenvalues;  // generalized eigenvalues of (S, S_tilde), ascending
    index_t n_u = 0;
    double bulk_min = 0.0, bulk_max = 0.0;  // all but the largest n_u
    double top_min = 0.0, top_max = 0.0;    // the largest n_u
};

// Exact Schur complement S = S_tilde + (1/beta) L versus the drop S_tilde:
// all but n_u generalized eigenvalues must sit at 1 (rank-n_u update).
// include_control=false is the L = 0 stand-in.
inline InterlacingReport schur_interlacing_report(int level, double alpha, double beta,
                                                  bool include_control = true) {
    ProblemSetup s(level);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, alpha, beta);
    detail::check_cap(k.n_v + k.n_p);
    DenseMatrix st = detail::dense_schur_tilde(k);
    DenseMatrix sm = st;
    if (include_control) {
        DenseMatrix drop = detail::dense_drop_term(k);
        for (index_t i = 0; i < sm.nrows; ++i)
            for (index_t j = 0; j < sm.ncols; ++j) sm(i, j) += drop(i, j) / beta;
    }
    SpectrumReport r = gen_sym_eig(sm, st);
    InterlacingReport out;
    out.eigenvalues = r.eigenvalues;
    out.n_u = k.n_u;
    index_t n = static_cast<index_t>(r.eigenvalues.size());
    index_t nb = n - k.n_u;
    out.bulk_min = r.eigenvalues.front();
    out.bulk_max = r.eigenvalues[nb - 1];
    out.top_min = r.eigenvalues[nb];
    out.top_max = r.eigenvalues.back();
    return out;
}

struct LowrankCheck {
    bool pass = true;
    index_t offending = -1;  // descending 1-based index of the first violated bound
    index_t rank = 0;
};

// Theorem check: for symmetric A and PSD L of rank m, the descending
// eigenvalues satisfy lambda_i(A) <= lambda_i(A+L) <= lambda_{i-m}(A), i > m
inline LowrankCheck lowrank_interlacing_check(const DenseMatrix& a, const DenseMatrix& l,
                                              double tol = 1e-10) {
    if (a.nrows != a.ncols || l.nrows != l.ncols || a.nrows != l.nrows)
        throw DimensionError("lowrank_interlacing_check: shape");
    SpectrumReport ra = sym_eig(a);
    SpectrumReport rl = sym_eig(l);
    double lscale = std::max(std::abs(rl.min), std::abs(rl.max));
    if (rl.min < -tol * std::max(lscale, 1.0))
        throw NotSpdError("lowrank_interlacing_check: L not positive semidefinite");
    index_t n = a.nrows;
    LowrankCheck out;
    for (double ev : rl.eigenvalues)
        if (ev > tol * std::max(lscale, 1.0)) ++out.rank;
    DenseMatrix b = a;
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < n; ++j) b(i, j) += l(i, j);
    SpectrumReport rb = sym_eig(std::move(b));
    // descending convention: lam[1] largest
    auto desc = [n](const Vec& asc, index_t i) { return asc[n - i]; };
    double scale = std::max({std::abs(ra.min), std::abs(ra.max), 1.0});
    for (index_t i = out.rank + 1; i <= n; ++i) {
        double lo = desc(ra.eigenvalues, i);
        double hi = desc(ra.eigenvalues, i - out.rank);
        double v = desc(rb.eigenvalues, i);
        if (v < lo - tol * scale || v > hi + tol * scale) {
            out.pass = false;
            out.offending = i;
            return out;
        }
    }
    return out;
}

struct ConvectionRow {
    int stride = 0;  // 0 marks the unreduced matrix
    index_t n_negative = 0;
    double cond = 0.0;
};

struct ConvectionReport {
    ConvectionRow full;
    std::vector<ConvectionRow> reduced;
    double off_support_max = 0.0;        // largest |N + N^T| entry away from x = +-1
    double negative_inflow_fraction = 0.0;  // squared eigenvector mass on the inflow line
    double median_positive_fraction = 0.0;
};

// Symmetric-part structure of the convection-diffusion block F = nu A + N
// for a given wind, with node-removal variants per stride. Eigenvalue counts
// are reported for the vector-valued block (twice the scalar counts).
inline ConvectionReport convection_symmetric_report(const ProblemSetup& s, double nu,
                                                    const Vec& wind_x, const Vec& wind_y,
                                                    const std::vector<int>& strides) {
    const ChannelMesh& m = s.mesh;
    detail::check_cap(m.n_scalar);
    SparseMatrix n = assemble_convection(m, wind_x, wind_y);
    ConvectionReport out;
    {
        SparseMatrix ns = symmetric_part(n);
        DenseMatrix nd = to_dense(ns);
        for (index_t i = 0; i < m.n_scalar; ++i) {
            if (m.on_inflow_line(i) || m.on_outflow_line(i)) continue;
            for (index_t j = 0; j < m.n_scalar; ++j) {
                if (m.on_inflow_line(j) || m.on_outflow_line(j)) continue;
                out.off_support_max = std::max(out.off_support_max, std::abs(nd(i, j)));
            }
        }
    }
    SparseMatrix f = add(n, s.stokes.A_s, 1.0, nu);
    SparseMatrix fs = symmetric_part(dirichlet_modify(std::move(f), wall_mask(m)));
    DenseMatrix fsd = to_dense(fs);
    DenseMatrix vecs;
    SpectrumReport rf = sym_eig(fsd, &vecs);
    out.full = {0, 2 * rf.n_negative, rf.condition_number};
    auto inflow_fraction = [&m, &vecs](index_t col) {
        double on = 0.0, tot = 0.0;
        for (index_t i = 0; i < vecs.nrows; ++i) {
            double v2 = vecs(i, col) * vecs(i, col);
            tot += v2;
            if (m.on_inflow_line(i)) on += v2;
        }
        return tot > 0.0 ? on / tot : 0.0;
    };
    if (rf.n_negative > 0) out.negative_inflow_fraction = inflow_fraction(0);
    {
        Vec pos;
        for (index_t c = rf.n_negative; c < static_cast<index_t>(rf.eigenvalues.size()); ++c)
            pos.push_back(inflow_fraction(c));
        if (!pos.empty()) {
            std::sort(pos.begin(), pos.end());
            out.median_positive_fraction = pos[pos.size() / 2];
        }
    }
    std::vector<index_t> inner;
    for (index_t nd : m.inflow_nodes)
        if (!m.is_wall(nd)) inner.push_back(nd);
    for (int st : strides) {
        if (st != 1 && st != 2 && st != 4 && st != 6 && st != 8)
            throw ConfigError("convection_symmetric_report: invalid stride");
        std::vector<bool> sel(m.n_scalar, false);
        for (std::size_t i = 0; i < inner.size(); i += static_cast<std::size_t>(st))
            sel[inner[i]] = true;
        std::vector<index_t> keep;
        for (index_t i = 0; i < m.n_scalar; ++i)
            if (!sel[i]) keep.push_back(i);
        SparseMatrix red = submatrix(fs, keep, keep);
        SpectrumReport rr = sym_eig(to_dense(red));
        out.reduced.push_back({st, 2 * rr.n_negative, rr.condition_number});
    }
    return out;
}

// Eigenvalue bounds of the diagonally scaled Q2 element mass matrix with
// left-edge nodes removed. Patterns use the 1-based row-major labels of the
// source table; its {1,5,7} column lists the full left edge, which is
// {1,4,7} in row-major labels, and is mapped accordingly.
inline SpectrumReport element_elimination_eigs(const std::vector<int>& pattern) {
    std::vector<int> p = pattern;
    std::sort(p.begin(), p.end());
    static const std::vector<std::vector<int>> allowed = {
        {}, {1}, {4}, {1, 4}, {1, 7}, {1, 5, 7}};
    if (std::find(allowed.begin(), allowed.end(), p) == allowed.end())
        throw ConfigError("element_elimination_eigs: unsupported pattern");
    std::vector<int> removed;
    if (p == std::vector<int>{1, 5, 7}) {
        removed = {0, 3, 6};  // full left edge
    } else {
        for (int lbl : p) removed.push_back(lbl - 1);
    }
    DenseMatrix q = q2_reference_element_mass();
    std::vector<index_t> keep;
    std::set<int> rem(removed.begin(), removed.end());
    for (int i = 0; i < 9; ++i)
        if (!rem.count(i)) keep.push_back(i);
    index_t n = static_cast<index_t>(keep.size());
    DenseMatrix qr(n, n), d(n, n);
    for (index_t a = 0; a < n; ++a) {
        for (index_t b = 0; b < n; ++b) qr(a, b) = q(keep[a], keep[b]);
        d(a, a) = q(keep[a], keep[a]);
    }
    return gen_sym_eig(qr, d);
}

// Spectrum of the KKT matrix preconditioned by blkdiag(A11, Schur); the exact
// Schur complement gives the three-eigenvalue cluster {1, (1 +- sqrt 5)/2}.
// exact_schur=false substitutes the control-term drop S_tilde.
inline SpectrumReport murphy_ideal_check(int level, double alpha, double beta,
                                         bool exact_schur = true) {
    ProblemSetup s(level);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, alpha, beta);
    detail::check_cap(k.total());
    index_t n1 = k.n_v + k.n_p + k.n_u;
    index_t n2 = k.total() - n1;
    DenseMatrix a = to_dense(k.mat);
    DenseMatrix a11(n1, n1);
    for (index_t i = 0; i < n1; ++i)
        for (index_t j = 0; j < n1; ++j) a11(i, j) = a(i, j);
    DenseMatrix sch;
    if (exact_schur) {
        DenseMatrix bm(n2, n1);
        for (index_t i = 0; i < n2; ++i)
            for (index_t j = 0; j < n1; ++j) bm(i, j) = a(n1 + i, j);
        DenseMatrix l = cholesky(a11);
        DenseMatrix x(n1, n2);
        for (index_t j = 0; j < n2; ++j) {
            Vec col(n1);
            for (index_t i = 0; i < n1; ++i) col[i] = bm(j, i);
            col = cholesky_solve(l, std::move(col));
            for (index_t i = 0; i < n1; ++i) x(i, j) = col[i];
        }
        sch = DenseMatrix(n2, n2);
        for (index_t i = 0; i < n2; ++i)
            for (index_t j = 0; j < n2; ++j) {
                double v = 0.0;
                for (index_t kk = 0; kk < n1; ++kk) v += bm(i, kk) * x(kk, j);
                sch(i, j) = v;
            }
        detail::symmetrize(sch);
    } else {
        sch = detail::dense_schur_tilde(k);
    }
    DenseMatrix prec = detail::blkdiag2(a11, sch);
    return gen_sym_eig(a, prec);
}

// largest distance from any eigenvalue to the ideal cluster {1, (1+-sqrt5)/2}
inline double murphy_cluster_distance(const SpectrumReport& r) {
    const double phi_p = (1.0 + std::sqrt(5.0)) / 2.0;
    const double phi_m = (1.0 - std::sqrt(5.0)) / 2.0;
    double worst = 0.0;
    for (double ev : r.eigenvalues) {
        double d = std::min({std::abs(ev - 1.0), std::abs(ev - phi_p), std::abs(ev - phi_m)});
        worst = std::max(worst, d);
    }
    return worst;
}

// relative error of the fixed-step Uzawa sweep against a direct saddle solve,
// maximized over random probe right-hand sides
inline double braess_peisker_eta(int level, int uzawa_steps, int n_probes = 5,
                                 unsigned seed = 11) {
    ProblemSetup s(level);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-3, 1e-3);
    detail::check_cap(k.n_v + k.n_p);
    StokesPrecondConfig cfg;
    cfg.uzawa_steps = uzawa_steps;
    StokesPrecond pc(s.mesh, k, cfg);
    LuFactors lu = lu_factor(detail::dense_saddle(k));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    double eta = 0.0;
    for (int p = 0; p < n_probes; ++p) {
        Vec b(k.n_v + k.n_p);
        for (auto& x : b) x = dist(rng);
        Vec approx = pc.uzawa().forward(b);
        Vec exact = lu_solve(lu, b);
        Vec diff(exact.size());
        for (std::size_t i = 0; i < exact.size(); ++i) diff[i] = approx[i] - exact[i];
        eta = std::max(eta, norm2(diff) / norm2(exact));
    }
    return eta;
}

}  // namespace flowctrl
