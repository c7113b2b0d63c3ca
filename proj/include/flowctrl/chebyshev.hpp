// SPDX-License-Identifier: MIT
#pragma once

#include "errors.hpp"
#include "sparse.hpp"
#include "vec.hpp"

namespace flowctrl {

// Mass-matrix eigenvalue bounds for D^{-1}Q on the uniform grid:
// Q2 velocity mass (1/4, 25/16), Q1 pressure mass (1/4, 9/4),
// 1D Q2 boundary mass (1/2, 5/4).
struct MassBounds {
    static constexpr double qv_lo = 0.25, qv_hi = 25.0 / 16.0;
    static constexpr double qp_lo = 0.25, qp_hi = 2.25;
    static constexpr double qu_lo = 0.5, qu_hi = 1.25;
};

struct ChebyshevConfig {
    int steps = 20;
    double theta = 0.0;  // lower bound for D^{-1}Q
    double Theta = 0.0;  // upper bound
};

// Fixed-step Chebyshev semi-iteration accelerating relaxed Jacobi, zero
// initial guess (a linear operator approximating Q^{-1}).
class ChebyshevOp {
  public:
    ChebyshevOp() = default;
    ChebyshevOp(const SparseMatrix& q, ChebyshevConfig cfg) : q_(&q), cfg_(cfg) {
        if (cfg.theta <= 0.0 || cfg.Theta < cfg.theta)
            throw ConfigError("chebyshev: bounds must satisfy 0 < theta <= Theta");
        if (cfg.steps < 1) throw ConfigError("chebyshev: steps must be >= 1");
        diag_ = diagonal(q);
        for (double d : diag_)
            if (d <= 0.0) throw NotSpdError("chebyshev: nonpositive diagonal");
        omega_ = 2.0 / (cfg.theta + cfg.Theta);
        rho_ = (cfg.Theta - cfg.theta) / (cfg.Theta + cfg.theta);
    }

    Vec apply(const Vec& r) const {
        index_t n = static_cast<index_t>(r.size());
        Vec f(n), yk(n), ykm(n, 0.0);
        for (index_t i = 0; i < n; ++i) f[i] = omega_ * r[i] / diag_[i];
        yk = f;
        double wk = 1.0;
        Vec qy;
        for (int k = 2; k <= cfg_.steps; ++k) {
            wk = (k == 2) ? 1.0 / (1.0 - rho_ * rho_ / 2.0)
                          : 1.0 / (1.0 - rho_ * rho_ * wk / 4.0);
            spmv(*q_, yk, qy);
            Vec ykp(n);
            for (index_t i = 0; i < n; ++i) {
                double gy = yk[i] - omega_ * qy[i] / diag_[i];
                ykp[i] = wk * (gy + f[i] - ykm[i]) + ykm[i];
            }
            ykm = std::move(yk);
            yk = std::move(ykp);
        }
        return yk;
    }

  private:
    const SparseMatrix* q_ = nullptr;
    ChebyshevConfig cfg_;
    Vec diag_;
    double omega_ = 0.0, rho_ = 0.0;
};

}  // namespace flowctrl
