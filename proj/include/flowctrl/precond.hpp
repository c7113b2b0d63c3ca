// SPDX-License-Identifier: MIT
#pragma once

#include <memory>
#include <set>
#include <vector>

#include "chebyshev.hpp"
#include "dense.hpp"
#include "eig_estimate.hpp"
#include "fem.hpp"
#include "kkt.hpp"
#include "mic0.hpp"
#include "minres.hpp"
#include "multigrid.hpp"
#include "uzawa.hpp"

namespace flowctrl {

struct StokesPrecondConfig {
    int cheb_steps = 20;
    int uzawa_steps = 5;
    int mg_cycles = 5;
    double sigma = 1.0;
    double tau = 1.0;
};

namespace detail {

inline Vec split_lo(const Vec& x, index_t n) { return Vec(x.begin(), x.begin() + n); }
inline Vec split_hi(const Vec& x, index_t n) { return Vec(x.begin() + n, x.end()); }

// apply a scalar operator independently to the two velocity components
template <class Op>
Vec per_component(const Op& op, const Vec& x) {
    index_t h = static_cast<index_t>(x.size()) / 2;
    Vec a = op(split_lo(x, h));
    Vec b = op(split_hi(x, h));
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace detail

// Block-diagonal preconditioner for the Stokes KKT system:
// Chebyshev on Q_v, alpha Q_p, beta Q_u; Schur block via
// M_S^{-1} = W^T Q W with W a fixed-step Uzawa sweep (multigrid velocity
// solves, Chebyshev pressure solves) and Q = blkdiag(Q_v, alpha Q_p).
class StokesPrecond {
  public:
    StokesPrecond(const ChannelMesh& m, const KktSystem& k, StokesPrecondConfig cfg = {})
        : k_(&k), cfg_(cfg),
          cheb_qv_(k.Qv_s, {cfg.cheb_steps, MassBounds::qv_lo, MassBounds::qv_hi}),
          cheb_qp_(k.Qp, {cfg.cheb_steps, MassBounds::qp_lo, MassBounds::qp_hi}),
          cheb_qu_(k.Qu_s, {cfg.cheb_steps, MassBounds::qu_lo, MassBounds::qu_hi}) {
        mg_ = std::make_unique<MultigridOp>(m.level, MultigridConfig{cfg.mg_cycles, 0.8, 2});
        f_vec_ = compose_blocks(k.n_v, k.n_v,
                                {{0, 0, &k.F_s, 1.0, false},
                                 {k.n_scalar, k.n_scalar, &k.F_s, 1.0, false}});
        UzawaConfig ucfg;
        ucfg.sigma = cfg.sigma;
        ucfg.tau = cfg.tau;
        ucfg.steps = cfg.uzawa_steps;
        LinOp zv = [this](const Vec& r) {
            return detail::per_component([this](const Vec& s) { return mg_->apply(s); }, r);
        };
        LinOp zp = [this](const Vec& r) { return cheb_qp_.apply(r); };
        uzawa_ = std::make_unique<UzawaOp>(&f_vec_, &k.B, zv, zp, ucfg, cfg.sigma);
    }

    Vec apply(const Vec& x) const {
        const KktSystem& k = *k_;
        Vec out(k.total());
        Vec v(x.begin(), x.begin() + k.n_v);
        Vec p(x.begin() + k.off_p(), x.begin() + k.off_p() + k.n_p);
        Vec u(x.begin() + k.off_u(), x.begin() + k.off_u() + k.n_u);
        Vec lm(x.begin() + k.off_lambda(), x.end());
        Vec rv = detail::per_component([this](const Vec& s) { return cheb_qv_.apply(s); }, v);
        Vec rp = cheb_qp_.apply(p);
        scale(rp, 1.0 / k.alpha);
        Vec ru = detail::per_component([this](const Vec& s) { return cheb_qu_.apply(s); }, u);
        scale(ru, 1.0 / k.beta);
        Vec rs = schur_apply(lm);
        index_t o = 0;
        for (double t : rv) out[o++] = t;
        for (double t : rp) out[o++] = t;
        for (double t : ru) out[o++] = t;
        for (double t : rs) out[o++] = t;
        return out;
    }

    LinOp as_linop() const {
        return [this](const Vec& x) { return apply(x); };
    }

    // M_S^{-1} r = W^T [Q_v w_v; alpha Q_p w_p], w = W r
    Vec schur_apply(const Vec& r) const {
        const KktSystem& k = *k_;
        Vec w = uzawa_->forward(r);
        Vec wv(w.begin(), w.begin() + k.n_v);
        Vec wp(w.begin() + k.n_v, w.end());
        Vec qv = detail::per_component(
            [&k](const Vec& s) { return spmv(k.Qv_s, s); }, wv);
        Vec qp = spmv(k.Qp, wp);
        scale(qp, k.alpha);
        qv.insert(qv.end(), qp.begin(), qp.end());
        return uzawa_->adjoint(qv);
    }

    const UzawaOp& uzawa() const { return *uzawa_; }
    const MultigridOp& multigrid() const { return *mg_; }

  private:
    const KktSystem* k_;
    StokesPrecondConfig cfg_;
    ChebyshevOp cheb_qv_, cheb_qp_, cheb_qu_;
    std::unique_ptr<MultigridOp> mg_;
    SparseMatrix f_vec_;
    std::unique_ptr<UzawaOp> uzawa_;
};

struct PermPrecondConfig {
    int cheb_steps = 20;
    int uzawa_steps = 30;
    double delta = 0.0;    // 0: use nu
    double tau = 1.0;
    double spd_tol = 1e-10;  // lower bound below which F'_S counts as indefinite
};

// 9x9 Q2 element mass matrix on the reference square, unit scaling
// (the Jacobian factor cancels in D^{-1}Q)
inline DenseMatrix q2_reference_element_mass() {
    DenseMatrix q(9, 9);
    for (int gx = 0; gx < 3; ++gx)
        for (int gy = 0; gy < 3; ++gy) {
            double wq = Gauss3::w[gx] * Gauss3::w[gy];
            std::array<double, 3> vx, dx, vy, dy;
            shape_q2(Gauss3::x[gx], vx, dx);
            shape_q2(Gauss3::x[gy], vy, dy);
            double n2[9];
            for (int jy = 0; jy < 3; ++jy)
                for (int jx = 0; jx < 3; ++jx) n2[jy * 3 + jx] = vx[jx] * vy[jy];
            for (int a = 0; a < 9; ++a)
                for (int b = 0; b < 9; ++b) q(a, b) += wq * n2[a] * n2[b];
        }
    return q;
}

// lambda_min of the diagonally scaled 9x9 Q2 element mass matrix with the
// given local nodes (0-based) removed; used for reduced-Q_v Chebyshev bounds
inline double element_mass_min_eig(const std::vector<int>& removed) {
    DenseMatrix q = q2_reference_element_mass();
    std::vector<index_t> keep;
    std::set<int> rem(removed.begin(), removed.end());
    for (int i = 0; i < 9; ++i)
        if (!rem.count(i)) keep.push_back(i);
    index_t m = static_cast<index_t>(keep.size());
    DenseMatrix qr(m, m), d(m, m);
    for (index_t a = 0; a < m; ++a) {
        for (index_t b = 0; b < m; ++b) qr(a, b) = q(keep[a], keep[b]);
        d(a, a) = q(keep[a], keep[a]);
    }
    return gen_sym_eig(qr, d).min;
}

// Block-diagonal preconditioner for the permuted Oseen KKT system (ordering
// v_keep, p, (u, v_moved), lambda, mu). The Schur part runs a nonsymmetric
// fixed-step Uzawa with MIC(0) on the symmetric part of the reduced F'.
class PermPrecond {
  public:
    PermPrecond(const ChannelMesh& m, const KktSystem& k, const PermutationPlan& plan,
                PermPrecondConfig cfg = {})
        : k_(&k), plan_(&plan), cfg_(cfg) {
        index_t ns = k.n_scalar;
        // moved mask on scalar nodes
        std::vector<bool> moved_s(ns, false);
        for (index_t nd : plan.selected_nodes) moved_s[nd] = true;
        f_red_s_ = dirichlet_modify(k.F_s, moved_s);
        fs_sym_ = symmetric_part(f_red_s_);
        auto [lmin, lmax] = lanczos_extremes(
            [this](const Vec& x) { return spmv(fs_sym_, x); }, ns,
            static_cast<int>(std::min<index_t>(120, ns)));
        fs_lambda_min_ = lmin;
        if (lmin <= cfg.spd_tol)
            throw DivergenceError("perm precond: symmetric part of reduced F' is indefinite");
        mic_ = std::make_unique<Mic0>(fs_sym_);
        auto [mn, mx] = lanczos_extremes(
            [this](const Vec& x) { return mic_->lsolve(spmv(fs_sym_, mic_->usolve(x))); }, ns,
            60);
        amin_ = std::max(mn, 1e-6);
        dmax_ = std::max(mx / amin_, 1.0);
        cheb_qp_ = ChebyshevOp(k.Qp, {cfg.cheb_steps, MassBounds::qp_lo, MassBounds::qp_hi});
        cheb_qu_ = ChebyshevOp(k.Qu_s, {cfg.cheb_steps, MassBounds::qu_lo, MassBounds::qu_hi});
        // Schur scaling: largest eigenvalue of Qp^{-1} B Atilde B^T
        smax_ = std::max(power_iteration_max(
                             [this, &k](const Vec& p) {
                                 Vec y = spmv(k.B, p, true);
                                 Vec z = detail::per_component(
                                     [this](const Vec& s) { return atilde_scalar(s); }, y);
                                 return cheb_qp_.apply(spmv(k.B, z));
                             },
                             k.n_p, 40),
                         1e-12);
        f_red_vec_ = compose_blocks(
            k.n_v, k.n_v, {{0, 0, &f_red_s_, 1.0, false}, {ns, ns, &f_red_s_, 1.0, false}});
        UzawaConfig ucfg;
        ucfg.tau = cfg.tau;
        ucfg.delta = cfg.delta > 0.0 ? cfg.delta : std::min(k.nu, 1.0);
        ucfg.steps = cfg.uzawa_steps;
        ucfg.divergence_check = true;
        LinOp zv = [this](const Vec& r) {
            return detail::per_component([this](const Vec& s) { return atilde_scalar(s); }, r);
        };
        LinOp zp = [this](const Vec& r) {
            Vec y = cheb_qp_.apply(r);
            scale(y, 1.0 / smax_);
            return y;
        };
        uzawa_ = std::make_unique<UzawaOp>(&f_red_vec_, &k.B, zv, zp, ucfg, ucfg.delta);
        // Schur Q weighting uses Q_v with moved rows/cols unit-modified
        qv_red_s_ = dirichlet_modify(k.Qv_s, moved_s);
        // reduced-velocity Chebyshev: worst-case theta over element patterns
        build_cheb_keep(m, moved_s);
        build_t33(k, plan);
    }

    double reduced_fs_lambda_min() const { return fs_lambda_min_; }

    Vec apply(const Vec& x) const {
        const KktSystem& k = *k_;
        const PermutationPlan& p = *plan_;
        index_t o = 0;
        Vec v(x.begin(), x.begin() + p.n_keep);
        o += p.n_keep;
        Vec pr(x.begin() + o, x.begin() + o + k.n_p);
        o += k.n_p;
        Vec t(x.begin() + o, x.begin() + o + p.n33);
        o += p.n33;
        Vec lm(x.begin() + o, x.end());
        Vec rv = cheb_keep_.apply(v);
        Vec rp = cheb_qp_.apply(pr);
        scale(rp, 1.0 / k.alpha);
        Vec rt = cholesky_solve(t33_chol_, t);
        Vec rs = schur_apply(lm);
        Vec out;
        out.reserve(x.size());
        out.insert(out.end(), rv.begin(), rv.end());
        out.insert(out.end(), rp.begin(), rp.end());
        out.insert(out.end(), rt.begin(), rt.end());
        out.insert(out.end(), rs.begin(), rs.end());
        return out;
    }

    LinOp as_linop() const {
        return [this](const Vec& x) { return apply(x); };
    }

    Vec schur_apply(const Vec& r) const {
        const KktSystem& k = *k_;
        Vec w = uzawa_->forward(r);
        Vec wv(w.begin(), w.begin() + k.n_v);
        Vec wp(w.begin() + k.n_v, w.end());
        Vec qv = detail::per_component(
            [this](const Vec& s) { return spmv(qv_red_s_, s); }, wv);
        Vec qp = spmv(k.Qp, wp);
        scale(qp, k.alpha);
        qv.insert(qv.end(), qp.begin(), qp.end());
        return uzawa_->adjoint(qv);
    }

    double cheb_theta() const { return theta_keep_; }
    // measured scaling diagnostics: lambda(Atilde^{-1} F'_S) in [1, dmax] after
    // scaling, and the Schur normalization lambda_max(Q_p^{-1} B Atilde B^T)
    double atilde_dmax() const { return dmax_; }
    double schur_scale() const { return smax_; }

  private:
    Vec atilde_scalar(const Vec& r) const {
        Vec y = mic_->apply(r);
        scale(y, 1.0 / amin_);
        return y;
    }

    void build_cheb_keep(const ChannelMesh& m, const std::vector<bool>& moved_s) {
        // per inflow-adjacent element, pattern of removed left-edge local nodes
        double theta = MassBounds::qv_lo;  // pattern {} is always present
        double worst = theta;
        for (index_t ey = 0; ey < m.elements_per_side; ++ey) {
            auto nodes = m.q2_element_nodes(0, ey);
            std::vector<int> removed;
            for (int loc : {0, 3, 6})
                if (moved_s[nodes[loc]]) removed.push_back(loc);
            if (removed.empty()) continue;
            worst = std::min(worst, element_mass_min_eig(removed));
        }
        theta_keep_ = worst;
        const KktSystem& k = *k_;
        std::vector<index_t> keep;
        for (index_t i = 0; i < k.n_v; ++i) {
            index_t s = i % k.n_scalar;
            if (!moved_s[s]) keep.push_back(i);
        }
        SparseMatrix qvv = compose_blocks(k.n_v, k.n_v,
                                          {{0, 0, &k.Qv_s, 1.0, false},
                                           {k.n_scalar, k.n_scalar, &k.Qv_s, 1.0, false}});
        qv_keep_ = submatrix(qvv, keep, keep);
        cheb_keep_ = ChebyshevOp(qv_keep_, {cfg_.cheb_steps, theta_keep_, MassBounds::qv_hi});
    }

    void build_t33(const KktSystem& k, const PermutationPlan& plan) {
        // (3,3) block of the dropped system: blkdiag(beta Q_u, Q_v[I,I]), SPD
        index_t nmoved = static_cast<index_t>(plan.moved.size());
        DenseMatrix t(plan.n33, plan.n33);
        DenseMatrix qu = to_dense(k.Qu_s);
        index_t nus = k.n_u / 2;
        for (index_t c = 0; c < 2; ++c)
            for (index_t i = 0; i < nus; ++i)
                for (index_t j = 0; j < nus; ++j)
                    t(c * nus + i, c * nus + j) = k.beta * qu(i, j);
        for (index_t a = 0; a < nmoved; ++a)
            for (index_t b = 0; b < nmoved; ++b) {
                index_t ia = plan.moved[a], ib = plan.moved[b];
                bool ca = ia >= k.n_scalar, cb = ib >= k.n_scalar;
                if (ca != cb) continue;
                index_t sa = ia % k.n_scalar, sb = ib % k.n_scalar;
                double v = 0.0;
                for (index_t kk = k.Qv_s.row_ptr[sa]; kk < k.Qv_s.row_ptr[sa + 1]; ++kk)
                    if (k.Qv_s.col_idx[kk] == sb) v = k.Qv_s.values[kk];
                t(k.n_u + a, k.n_u + b) = v;
            }
        t33_chol_ = cholesky(t);
    }

    const KktSystem* k_;
    const PermutationPlan* plan_;
    PermPrecondConfig cfg_;
    SparseMatrix f_red_s_, fs_sym_, f_red_vec_, qv_red_s_, qv_keep_;
    std::unique_ptr<Mic0> mic_;
    std::unique_ptr<UzawaOp> uzawa_;
    ChebyshevOp cheb_qp_, cheb_qu_, cheb_keep_;
    DenseMatrix t33_chol_;
    double amin_ = 1.0, dmax_ = 1.0, smax_ = 1.0, theta_keep_ = 0.25, fs_lambda_min_ = 0.0;
};

}  // namespace flowctrl
