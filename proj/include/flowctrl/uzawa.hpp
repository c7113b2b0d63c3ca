// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <functional>

#include "errors.hpp"
#include "minres.hpp"
#include "sparse.hpp"
#include "vec.hpp"

namespace flowctrl {

struct UzawaConfig {
    double sigma = 1.0;  // velocity step (symmetric variant)
    double tau = 1.0;    // pressure step
    double delta = 0.0;  // velocity damping, nonsymmetric variant (default nu at setup)
    int steps = 5;       // 5 for Stokes, 30 for Oseen
    bool divergence_check = false;
    double divergence_factor = 1e6;
};

// Fixed-step inexact Uzawa on the saddle system K = [F B^T; B 0], as a linear
// operator W with exact algebraic adjoint W^T. One step from iterate x:
//   x += s Zv (r - K x)      (velocity half-step, s = sigma or delta)
//   x -= t Zp (r - K x)      (pressure half-step; the sign matches the
//                             negative-definite Schur block of K)
// Zv applies the velocity sub-preconditioner on the first n_v entries, Zp the
// Schur sub-preconditioner on the last n_p entries.
class UzawaOp {
  public:
    UzawaOp() = default;
    UzawaOp(const SparseMatrix* f_vec, const SparseMatrix* b, LinOp zv_scalar_pair,
            LinOp zp, UzawaConfig cfg, double vel_step)
        : f_(f_vec), b_(b), zv_(std::move(zv_scalar_pair)), zp_(std::move(zp)), cfg_(cfg),
          s_(vel_step) {
        nv_ = f_->nrows;
        np_ = b_->nrows;
    }

    index_t size() const { return nv_ + np_; }

    Vec apply_k(const Vec& x, bool transposed) const {
        Vec fv(nv_), out(nv_ + np_);
        Vec xv(x.begin(), x.begin() + nv_);
        Vec xp(x.begin() + nv_, x.end());
        spmv(*f_, xv, fv, transposed);
        Vec btp = spmv(*b_, xp, true);
        for (index_t i = 0; i < nv_; ++i) out[i] = fv[i] + btp[i];
        Vec bv = spmv(*b_, xv);
        for (index_t i = 0; i < np_; ++i) out[nv_ + i] = bv[i];
        return out;
    }

    // W r  (approximate K^{-1} r)
    Vec forward(const Vec& r) const {
        Vec x(size(), 0.0);
        double rnorm = norm2(r);
        for (int k = 0; k < cfg_.steps; ++k) {
            Vec res = residual(r, x, false);
            Vec zv = apply_zv(res);
            for (index_t i = 0; i < nv_; ++i) x[i] += s_ * zv[i];
            res = residual(r, x, false);
            Vec zp = zp_(Vec(res.begin() + nv_, res.end()));
            for (index_t i = 0; i < np_; ++i) x[nv_ + i] -= cfg_.tau * zp[i];
            if (cfg_.divergence_check) {
                double xn = norm2(x);
                if (!std::isfinite(xn) || xn > cfg_.divergence_factor * (rnorm + 1.0))
                    throw DivergenceError("uzawa: iterate norm growth");
            }
        }
        return x;
    }

    // W^T r, the exact adjoint of forward(): W = (sum_j T^j) C with
    // T = (I - tau Zp' K)(I + s Zv' K) acting as above, so
    // W^T = C^T sum_j (T^T)^j with K^T substituted into the sweeps.
    Vec adjoint(const Vec& r) const {
        Vec acc = r, u = r;
        for (int j = 1; j < cfg_.steps; ++j) {
            // u <- T^T u
            Vec zp = zp_(Vec(u.begin() + nv_, u.end()));
            Vec full(size(), 0.0);
            for (index_t i = 0; i < np_; ++i) full[nv_ + i] = zp[i];
            Vec kt = apply_k(full, true);
            for (index_t i = 0; i < size(); ++i) u[i] += cfg_.tau * kt[i];
            Vec zv = apply_zv(u);
            Vec fullv(size(), 0.0);
            for (index_t i = 0; i < nv_; ++i) fullv[i] = zv[i];
            kt = apply_k(fullv, true);
            for (index_t i = 0; i < size(); ++i) u[i] -= s_ * kt[i];
            for (index_t i = 0; i < size(); ++i) acc[i] += u[i];
        }
        // C^T acc = -tau Zp'(acc) + s Zv'(acc + tau K^T Zp'(acc))
        Vec zp = zp_(Vec(acc.begin() + nv_, acc.end()));
        Vec full(size(), 0.0);
        for (index_t i = 0; i < np_; ++i) full[nv_ + i] = zp[i];
        Vec kt = apply_k(full, true);
        Vec tmp(size());
        for (index_t i = 0; i < size(); ++i) tmp[i] = acc[i] + cfg_.tau * kt[i];
        Vec zv = apply_zv(tmp);
        Vec out(size(), 0.0);
        for (index_t i = 0; i < nv_; ++i) out[i] = s_ * zv[i];
        for (index_t i = 0; i < np_; ++i) out[nv_ + i] = -cfg_.tau * zp[i];
        return out;
    }

  private:
    Vec residual(const Vec& r, const Vec& x, bool transposed) const {
        Vec kx = apply_k(x, transposed);
        Vec res(size());
        for (index_t i = 0; i < size(); ++i) res[i] = r[i] - kx[i];
        return res;
    }

    Vec apply_zv(const Vec& full) const { return zv_(Vec(full.begin(), full.begin() + nv_)); }

    const SparseMatrix* f_ = nullptr;  // n_v x n_v velocity block
    const SparseMatrix* b_ = nullptr;  // n_p x n_v
    LinOp zv_;  // velocity preconditioner on length-n_v vectors
    LinOp zp_;  // Schur preconditioner on length-n_p vectors
    UzawaConfig cfg_;
    double s_ = 1.0;
    index_t nv_ = 0, np_ = 0;
};

}  // namespace flowctrl
