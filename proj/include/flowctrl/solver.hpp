// SPDX-License-Identifier: MIT
#pragma once

#include <optional>

#include "kkt.hpp"
#include "minres.hpp"
#include "precond.hpp"

namespace flowctrl {

struct ProblemSetup {
    ChannelMesh mesh;
    StokesBlocks stokes;
    ControlBlocks control;
    Targets targets;

    explicit ProblemSetup(int level)
        : mesh(level), stokes(assemble_stokes_blocks(mesh)),
          control(assemble_control_blocks(mesh)), targets(build_targets(mesh)) {}
};

inline double control_energy(const KktSystem& k, const Vec& solution) {
    Vec u(solution.begin() + k.off_u(), solution.begin() + k.off_u() + k.n_u);
    Vec qu = detail::per_component([&k](const Vec& s) { return spmv(k.Qu_s, s); }, u);
    return dot(u, qu);
}

struct StokesControlResult {
    Vec solution;
    SolveReport report;
    double energy = 0.0;
};

struct SolverOptions {
    double tol = 1e-6;
    index_t maxit = 2000;
    StokesPrecondConfig stokes_pc = {};
    PermPrecondConfig perm_pc = {};
    int stride = 1;
};

inline StokesControlResult solve_stokes_control(const ProblemSetup& s, double alpha, double beta,
                                                const SolverOptions& opt = {}) {
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, alpha, beta);
    StokesPrecond pc(s.mesh, k, opt.stokes_pc);
    StokesControlResult r;
    MinresOptions mopt;
    mopt.tol = opt.tol;
    mopt.maxit = opt.maxit;
    r.solution = minres([&k](const Vec& x) { return spmv(k.mat, x); }, pc.as_linop(), k.rhs,
                        r.report, mopt);
    r.energy = control_energy(k, r.solution);
    return r;
}

struct OseenControlResult {
    Vec solution;  // original (unpermuted) ordering
    SolveReport report;
    double energy = 0.0;
};

// one Oseen KKT solve with the permutational preconditioner; wind in scalar
// component vectors; optional warm start in the original ordering
inline OseenControlResult solve_oseen_control(const ProblemSetup& s, const Vec& wind_x,
                                              const Vec& wind_y, double alpha, double beta,
                                              double nu, const SolverOptions& opt,
                                              const Vec* x0 = nullptr) {
    KktSystem k =
        build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, wind_x, wind_y, alpha, beta, nu);
    PermutationPlan plan = plan_permutation(s.mesh, k, opt.stride);
    PermutedSystem ps = apply_permutation_and_drop(k, plan);
    PermPrecond pc(s.mesh, k, plan, opt.perm_pc);  // throws DivergenceError when indefinite
    MinresOptions mopt;
    mopt.tol = opt.tol;
    mopt.maxit = opt.maxit;
    Vec x0p;
    if (x0) {
        x0p.resize(x0->size());
        for (std::size_t i = 0; i < x0->size(); ++i) x0p[i] = (*x0)[plan.perm[i]];
        mopt.x0 = &x0p;
    }
    OseenControlResult r;
    Vec y = minres([&ps](const Vec& x) { return spmv(ps.permuted, x); }, pc.as_linop(), ps.rhs,
                   r.report, mopt);
    r.solution.assign(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) r.solution[plan.perm[i]] = y[i];
    r.energy = control_energy(k, r.solution);
    return r;
}

struct NonlinearReport {
    index_t picard_iterations = 0;  // Oseen solves after the initial guess
    std::vector<index_t> minres_counts;
    double average_minres = 0.0;
    Vec residual_history;  // nonlinear residual per outer iteration
    double control_energy = 0.0;
    bool converged = false;
};

struct PicardOptions {
    double nonlinear_tol = 1e-6;
    index_t max_picard = 40;
    SolverOptions inner = {};
};

struct NavierControlResult {
    Vec solution;
    NonlinearReport report;
};

// Picard iteration: wind from the previous iterate, warm-started inner MINRES
// solves, stop at nonlinear residual reduction by nonlinear_tol. The initial
// guess (zero-wind solve, the nu-scaled Stokes problem) is not counted.
inline NavierControlResult solve_navier_control(const ProblemSetup& s, double alpha, double beta,
                                                double nu, const PicardOptions& opt = {}) {
    index_t ns = s.mesh.n_scalar;
    Vec wx(ns, 0.0), wy(ns, 0.0);
    NavierControlResult out;
    OseenControlResult cur = solve_oseen_control(s, wx, wy, alpha, beta, nu, opt.inner);
    double r0 = -1.0;
    for (index_t it = 0; it < opt.max_picard; ++it) {
        wx.assign(cur.solution.begin(), cur.solution.begin() + ns);
        wy.assign(cur.solution.begin() + ns, cur.solution.begin() + 2 * ns);
        KktSystem k = build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, wx, wy, alpha,
                                      beta, nu);
        Vec ax = spmv(k.mat, cur.solution);
        Vec res(ax.size());
        for (std::size_t i = 0; i < ax.size(); ++i) res[i] = k.rhs[i] - ax[i];
        double r = norm2(res);
        out.report.residual_history.push_back(r);
        if (r0 < 0.0) r0 = r;
        if (r <= opt.nonlinear_tol * r0) {
            out.report.converged = true;
            break;
        }
        cur = solve_oseen_control(s, wx, wy, alpha, beta, nu, opt.inner, &cur.solution);
        out.report.minres_counts.push_back(cur.report.iterations);
    }
    if (!out.report.converged)
        throw NonConvergence("picard: max nonlinear iterations reached");
    out.report.picard_iterations = static_cast<index_t>(out.report.minres_counts.size());
    double sum = 0.0;
    for (index_t c : out.report.minres_counts) sum += static_cast<double>(c);
    out.report.average_minres =
        out.report.minres_counts.empty() ? 0.0 : sum / out.report.minres_counts.size();
    KktSystem kf = build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, wx, wy, alpha, beta,
                                   nu);
    out.report.control_energy = control_energy(kf, cur.solution);
    out.solution = std::move(cur.solution);
    return out;
}

}  // namespace flowctrl
