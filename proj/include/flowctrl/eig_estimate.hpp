// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <random>

#include "dense.hpp"
#include "minres.hpp"
#include "vec.hpp"

namespace flowctrl {

// extreme eigenvalue estimates of a symmetric operator by plain Lanczos
// (setup-time scaling estimates only; fixed seed for reproducibility)
inline std::pair<double, double> lanczos_extremes(const LinOp& op, index_t n, int steps = 60,
                                                  unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Vec v(n);
    for (auto& x : v) x = dist(rng);
    scale(v, 1.0 / norm2(v));
    Vec vm(n, 0.0);
    double beta = 0.0;
    Vec alphas, betas;
    int m = std::min<index_t>(steps, n);
    for (int j = 0; j < m; ++j) {
        Vec w = op(v);
        axpy(-beta, vm, w);
        double a = dot(v, w);
        axpy(-a, v, w);
        double b = norm2(w);
        alphas.push_back(a);
        betas.push_back(b);
        if (b < 1e-12) break;
        vm = v;
        scale(w, 1.0 / b);
        v = std::move(w);
        beta = b;
    }
    index_t k = static_cast<index_t>(alphas.size());
    DenseMatrix t(k, k);
    for (index_t i = 0; i < k; ++i) {
        t(i, i) = alphas[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = betas[i];
    }
    SpectrumReport r = sym_eig(std::move(t));
    return {r.min, r.max};
}

// dominant eigenvalue of an operator with real positive dominant spectrum
inline double power_iteration_max(const LinOp& op, index_t n, int steps = 40,
                                  unsigned seed = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Vec v(n);
    for (auto& x : v) x = dist(rng);
    double lam = 1.0;
    for (int s = 0; s < steps; ++s) {
        Vec w = op(v);
        lam = norm2(w);
        if (lam == 0.0) return 0.0;
        scale(w, 1.0 / lam);
        v = std::move(w);
    }
    return lam;
}

}  // namespace flowctrl
