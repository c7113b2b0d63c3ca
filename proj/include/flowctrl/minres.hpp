// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <chrono>
#include <functional>
#include <random>

#include "errors.hpp"
#include "vec.hpp"

namespace flowctrl {

using LinOp = std::function<Vec(const Vec&)>;

struct SolveReport {
    index_t iterations = 0;
    Vec residual_history;  // preconditioned residual norms, starting at iteration 0
    bool converged = false;
    double relative_tolerance = 0.0;
    double wall_time = 0.0;
    double final_true_residual = 0.0;
};

struct MinresOptions {
    double tol = 1e-6;
    index_t maxit = 2000;
    bool probe = false;  // stochastic symmetry/SPD checks before solving
    const Vec* x0 = nullptr;
};

inline void probe_operators(const LinOp& a_op, const LinOp& m_inv, index_t n) {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> dist;
    Vec x(n), y(n);
    for (auto& v : x) v = dist(rng);
    for (auto& v : y) v = dist(rng);
    Vec ax = a_op(x), ay = a_op(y);
    double nx = norm2(x), ny = norm2(y);
    double scale_a = norm2(ax) / (nx > 0 ? nx : 1.0);
    if (std::abs(dot(x, ay) - dot(y, ax)) > 1e-10 * nx * ny * (scale_a > 0 ? scale_a : 1.0))
        throw SymmetryError("minres: operator fails symmetry probe");
    Vec mx = m_inv(x), my = m_inv(y);
    if (std::abs(dot(x, my) - dot(y, mx)) > 1e-10 * nx * ny)
        throw PreconditionerError("minres: preconditioner fails symmetry probe");
    if (dot(x, mx) <= 0.0 || dot(y, my) <= 0.0)
        throw PreconditionerError("minres: preconditioner fails positivity probe");
    // linearity: M(x+y) = Mx + My
    Vec xy(n);
    for (index_t i = 0; i < n; ++i) xy[i] = x[i] + y[i];
    Vec mxy = m_inv(xy);
    double defect = 0.0;
    for (index_t i = 0; i < n; ++i) defect = std::max(defect, std::abs(mxy[i] - mx[i] - my[i]));
    double ref = 0.0;
    for (index_t i = 0; i < n; ++i) ref = std::max(ref, std::abs(mxy[i]));
    if (defect > 1e-10 * (ref > 0 ? ref : 1.0))
        throw PreconditionerError("minres: preconditioner fails linearity probe");
}

// Preconditioned MINRES (Paige-Saunders recurrence); |eta| tracks the
// preconditioned residual norm, which the relative tolerance applies to.
inline Vec minres(const LinOp& a_op, const LinOp& m_inv, const Vec& b, SolveReport& rep,
                  const MinresOptions& opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    index_t n = static_cast<index_t>(b.size());
    if (opt.probe) probe_operators(a_op, m_inv, n);
    rep = SolveReport{};
    rep.relative_tolerance = opt.tol;

    Vec x = opt.x0 ? *opt.x0 : zeros(n);
    Vec v = b;
    if (opt.x0) {
        Vec ax = a_op(x);
        for (index_t i = 0; i < n; ++i) v[i] -= ax[i];
    }
    Vec v_old = zeros(n);
    Vec z = m_inv(v);
    double gamma = std::sqrt(std::max(dot(z, v), 0.0));
    double gamma_old = 1.0;
    double eta = gamma;
    double s_old = 0.0, s = 0.0, c_old = 1.0, c = 1.0;
    Vec w = zeros(n), w_old = zeros(n);
    rep.residual_history.push_back(gamma);
    const double target = opt.tol * gamma;
    if (gamma == 0.0) {
        rep.converged = true;
        return x;
    }
    for (index_t it = 1; it <= opt.maxit; ++it) {
        for (index_t i = 0; i < n; ++i) z[i] /= gamma;
        Vec az = a_op(z);
        double delta = dot(az, z);
        Vec v_new = az;
        for (index_t i = 0; i < n; ++i)
            v_new[i] -= (delta / gamma) * v[i] + (gamma / gamma_old) * v_old[i];
        Vec z_new = m_inv(v_new);
        double gamma_new = std::sqrt(std::max(dot(z_new, v_new), 0.0));
        double a0 = c * delta - c_old * s * gamma;
        double a1 = std::hypot(a0, gamma_new);
        double a2 = s * delta + c_old * c * gamma;
        double a3 = s_old * gamma;
        c_old = c;
        s_old = s;
        c = a0 / a1;
        s = gamma_new / a1;
        Vec w_new(n);
        for (index_t i = 0; i < n; ++i) w_new[i] = (z[i] - a3 * w_old[i] - a2 * w[i]) / a1;
        for (index_t i = 0; i < n; ++i) x[i] += (c * eta) * w_new[i];
        eta = -s * eta;
        rep.residual_history.push_back(std::abs(eta));
        rep.iterations = it;
        v_old = std::move(v);
        v = std::move(v_new);
        z = std::move(z_new);
        w_old = std::move(w);
        w = std::move(w_new);
        gamma_old = gamma;
        gamma = gamma_new;
        if (std::abs(eta) <= target) {
            rep.converged = true;
            break;
        }
        if (gamma == 0.0) {
            rep.converged = true;
            break;
        }
    }
    {
        Vec ax = a_op(x);
        Vec r(n);
        for (index_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
        rep.final_true_residual = norm2(r);
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return x;
}

}  // namespace flowctrl
