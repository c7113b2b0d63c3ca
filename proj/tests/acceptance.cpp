// SPDX-License-Identifier: MIT
// Acceptance gate: one pass/fail line per criterion, exit code is the number
// of failed criteria. Slow end-to-end runs are shared between criteria.
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flowctrl/analysis.hpp"
#include "flowctrl/solver.hpp"

using namespace flowctrl;

namespace {

int g_failures = 0;

void report(int num, bool pass, const std::string& title, const std::string& detail) {
    std::printf("[%2d] %s %s\n", num, pass ? "PASS" : "FAIL", title.c_str());
    if (!detail.empty()) std::printf("%s", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double rel_diff(const Vec& a, const Vec& b) {
    double d = 0.0, n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        n += b[i] * b[i];
    }
    return std::sqrt(d / n);
}

// ---- shared nonlinear runs (stride 1, beta = 1, alpha = 1e-3) ----

struct NsCell {
    bool dash = false;       // divergence detected while building the preconditioner
    bool converged = false;
    index_t picard = 0;
    double average_minres = 0.0;
    double energy = 0.0;
    Vec wind_x, wind_y;      // converged state velocity components
    std::string error;
};

const double kNuValues[] = {1.0 / 5.0, 1.0 / 10.0, 1.0 / 20.0, 1.0 / 30.0};

std::map<std::pair<int, int>, NsCell> g_ns;

const NsCell& ns_cell(int level, int nu_idx) {
    auto key = std::make_pair(level, nu_idx);
    auto it = g_ns.find(key);
    if (it != g_ns.end()) return it->second;
    NsCell cell;
    try {
        ProblemSetup s(level);
        PicardOptions po;
        // let inner solves actually reach their tolerance: cap at the Krylov
        // dimension bound instead of the flat command-line default
        index_t total = 4 * s.mesh.n_scalar + 2 * s.mesh.n_p + 2 * s.mesh.nq2;
        po.inner.maxit = std::max<index_t>(po.inner.maxit, total);
        NavierControlResult r = solve_navier_control(s, 1e-3, 1.0, kNuValues[nu_idx], po);
        cell.converged = r.report.converged;
        cell.picard = r.report.picard_iterations;
        cell.average_minres = r.report.average_minres;
        cell.energy = r.report.control_energy;
        index_t ns = s.mesh.n_scalar;
        cell.wind_x.assign(r.solution.begin(), r.solution.begin() + ns);
        cell.wind_y.assign(r.solution.begin() + ns, r.solution.begin() + 2 * ns);
    } catch (const DivergenceError& e) {
        cell.dash = true;
        cell.error = e.what();
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    return g_ns.emplace(key, std::move(cell)).first->second;
}

// ---- criteria ----

void criterion_1() {
    const index_t expected_total[] = {128, 392, 1352, 5000, 19208, 75272};
    const index_t expected_n33[] = {14, 26, 50, 98, 194, 386};
    bool pass = true;
    std::ostringstream d;
    for (int l = 2; l <= 7; ++l) {
        ProblemSetup s(l);
        KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-3, 1e-3);
        PermutationPlan p = plan_permutation(s.mesh, k, 2);
        bool ok = k.total() == expected_total[l - 2] && p.n33 == expected_n33[l - 2];
        pass = pass && ok;
        d << "     l=" << l << " N=" << k.total() << " (want " << expected_total[l - 2]
          << ") n33=" << p.n33 << " (want " << expected_n33[l - 2] << ")"
          << (ok ? "" : "  <-- mismatch") << "\n";
    }
    report(1, pass, "dimension table across levels 2..7", d.str());
}

void criterion_2() {
    auto extremes = [](const DenseMatrix& q) {
        index_t n = q.nrows;
        DenseMatrix diag(n, n);
        for (index_t i = 0; i < n; ++i) diag(i, i) = q(i, i);
        SpectrumReport r = gen_sym_eig(q, diag);
        return std::pair<double, double>{r.min, r.max};
    };
    DenseMatrix q2 = q2_reference_element_mass();
    DenseMatrix q1(4, 4);
    for (int gx = 0; gx < 3; ++gx)
        for (int gy = 0; gy < 3; ++gy) {
            double w = Gauss3::w[gx] * Gauss3::w[gy];
            std::array<double, 2> vx, vy;
            shape_q1(Gauss3::x[gx], vx);
            shape_q1(Gauss3::x[gy], vy);
            double n1[4] = {vx[0] * vy[0], vx[1] * vy[0], vx[0] * vy[1], vx[1] * vy[1]};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) q1(a, b) += w * n1[a] * n1[b];
        }
    DenseMatrix q2_1d(3, 3);
    for (int g = 0; g < 3; ++g) {
        std::array<double, 3> v, dv;
        shape_q2(Gauss3::x[g], v, dv);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) q2_1d(a, b) += Gauss3::w[g] * v[a] * v[b];
    }
    auto [v_lo, v_hi] = extremes(q2);
    auto [p_lo, p_hi] = extremes(q1);
    auto [u_lo, u_hi] = extremes(q2_1d);
    const double tol = 1e-12;
    bool pass = std::abs(v_lo - 0.25) < tol && std::abs(v_hi - 25.0 / 16.0) < tol &&
                std::abs(p_lo - 0.25) < tol && std::abs(p_hi - 2.25) < tol &&
                std::abs(u_lo - 0.5) < tol && std::abs(u_hi - 1.25) < tol;
    std::ostringstream d;
    d << "     velocity element (" << v_lo << ", " << v_hi << ") want (0.25, 1.5625)\n"
      << "     pressure element (" << p_lo << ", " << p_hi << ") want (0.25, 2.25)\n"
      << "     control element  (" << u_lo << ", " << u_hi << ") want (0.5, 1.25)\n";
    report(2, pass, "element mass-matrix eigenvalue bounds", d.str());
}

void criterion_3() {
    double kv = mass_spectrum_report(MassKind::Qv, 3, 20).condition_number;
    double kp = mass_spectrum_report(MassKind::Qp, 3, 20).condition_number;
    double ku = mass_spectrum_report(MassKind::Qu, 3, 20).condition_number;
    bool pass = kv - 1.0 <= 5e-7 && kp - 1.0 <= 1e-5 && ku - 1.0 <= 1e-11;
    std::ostringstream d;
    d.precision(3);
    d << std::scientific << "     kappa-1: velocity " << kv - 1.0 << " (<=5e-7), pressure "
      << kp - 1.0 << " (<=1e-5), control " << ku - 1.0 << " (<=1e-11)\n";
    report(3, pass, "chebyshev mass-solve conditioning at 20 steps", d.str());
}

void criterion_4() {
    const std::vector<std::vector<int>> patterns = {{}, {1}, {4}, {1, 4}, {1, 7}, {1, 5, 7}};
    const double expected_min[] = {0.2500, 0.3125, 0.3125, 0.3506, 0.3506, 0.3750};
    bool pass = true;
    std::ostringstream d;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        SpectrumReport r = element_elimination_eigs(patterns[i]);
        bool ok = std::abs(r.min - expected_min[i]) < 1e-4 && std::abs(r.max - 1.5625) < 1e-4;
        pass = pass && ok;
        d << "     pattern " << i << ": min " << r.min << " (want " << expected_min[i]
          << ") max " << r.max << (ok ? "" : "  <-- mismatch") << "\n";
    }
    report(4, pass, "node-removal element spectra", d.str());
}

void criterion_5() {
    SpectrumReport r = murphy_ideal_check(2, 1e-2, 1e-2, true);
    double dist = murphy_cluster_distance(r);
    std::ostringstream d;
    d.precision(3);
    d << std::scientific << "     worst distance to {1, (1+-sqrt5)/2}: " << dist << "\n";
    report(5, dist < 1e-8, "three-eigenvalue cluster with the ideal preconditioner", d.str());
}

void criterion_6() {
    std::mt19937 rng(4242);
    std::normal_distribution<double> nd;
    int fails = 0, trials = 60;
    for (int t = 0; t < trials; ++t) {
        index_t n = 8 + static_cast<index_t>(t % 7);
        index_t rank = 1 + static_cast<index_t>(t % 5);
        DenseMatrix a(n, n);
        for (index_t i = 0; i < n; ++i)
            for (index_t j = i; j < n; ++j) a(i, j) = a(j, i) = nd(rng);
        DenseMatrix l(n, n);
        for (index_t r = 0; r < rank; ++r) {
            Vec v(n);
            for (auto& x : v) x = nd(rng);
            for (index_t i = 0; i < n; ++i)
                for (index_t j = 0; j < n; ++j) l(i, j) += v[i] * v[j];
        }
        if (!lowrank_interlacing_check(a, l).pass) ++fails;
    }
    InterlacingReport r = schur_interlacing_report(3, 1e-3, 1e-3);
    int outside = 0;
    for (double e : r.eigenvalues)
        if (e < 1.0 - 1e-8 || e > 1.5 + 1e-8) ++outside;
    bool pass = fails == 0 && outside <= static_cast<int>(r.n_u);
    std::ostringstream d;
    d << "     randomized trials: " << trials - fails << "/" << trials << " passed\n"
      << "     eigenvalues outside [1, 1.5]: " << outside << " (allowed " << r.n_u << ")\n";
    report(6, pass, "interlacing of the control-term update", d.str());
}

void criterion_7() {
    const double source[] = {43, 48, 47, 54};
    bool pass = true;
    std::ostringstream d;
    index_t count_l2 = 0, count_l6 = 0;
    for (int l = 2; l <= 6; ++l) {
        ProblemSetup s(l);
        StokesControlResult r = solve_stokes_control(s, 1e-3, 1e-3);
        if (l == 2) count_l2 = r.report.iterations;
        if (l == 6) count_l6 = r.report.iterations;
        bool ok = r.report.converged;
        if (l <= 5) {
            double c = static_cast<double>(r.report.iterations);
            ok = ok && c >= 0.7 * source[l - 2] && c <= 1.3 * source[l - 2];
            d << "     l=" << l << " iterations=" << r.report.iterations << " band ["
              << 0.7 * source[l - 2] << ", " << 1.3 * source[l - 2] << "]"
              << (ok ? "" : "  <-- outside") << "\n";
        } else {
            d << "     l=6 iterations=" << r.report.iterations << "\n";
        }
        pass = pass && ok;
    }
    bool robust = static_cast<double>(count_l6) <= 1.5 * static_cast<double>(count_l2);
    d << "     growth l=2 -> l=6: " << count_l2 << " -> " << count_l6 << " (<= 1.5x required)"
      << (robust ? "" : "  <-- violated") << "\n";
    report(7, pass && robust, "stokes control iteration counts", d.str());
}

void criterion_8() {
    bool pass = true;
    std::ostringstream d;
    for (int l = 2; l <= 3; ++l) {
        ProblemSetup s(l);
        SolverOptions opt;
        opt.tol = 1e-8;
        StokesControlResult r = solve_stokes_control(s, 1e-3, 1e-3, opt);
        KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-3, 1e-3);
        Vec direct = lu_solve(lu_factor(to_dense(k.mat)), k.rhs);
        double err = rel_diff(r.solution, direct);
        bool ok = err < 1e-5;
        pass = pass && ok;
        d.precision(3);
        d << std::scientific << "     l=" << l << " relative error vs direct solve: " << err
          << (ok ? "" : "  <-- too large") << "\n";
    }
    report(8, pass, "iterative solutions match dense factorizations", d.str());
}

void criterion_9() {
    ProblemSetup s(3);
    const ChannelMesh& m = s.mesh;
    KktSystem k = build_stokes_kkt(m, s.stokes, s.control, s.targets, 1.0, 1.0);
    index_t nv = k.n_v, np = k.n_p, n = nv + np;
    DenseMatrix a(n, n);
    DenseMatrix df = to_dense(k.F_s);
    for (index_t i = 0; i < m.n_scalar; ++i)
        for (index_t j = 0; j < m.n_scalar; ++j) {
            a(i, j) = df(i, j);
            a(m.n_scalar + i, m.n_scalar + j) = df(i, j);
        }
    DenseMatrix db = to_dense(k.B);
    for (index_t i = 0; i < np; ++i)
        for (index_t j = 0; j < nv; ++j) {
            a(nv + i, j) = db(i, j);
            a(j, nv + i) = db(i, j);
        }
    Vec traction(k.n_u, 0.0);
    for (index_t i = 0; i < k.n_u / 2; ++i) traction[i] = 4.0;
    Vec g = spmv(k.Qhat_v, traction);
    Vec rhs(n, 0.0);
    for (index_t i = 0; i < nv; ++i) rhs[i] = g[i];
    Vec sol = lu_solve(lu_factor(a), rhs);
    double worst = 0.0;
    for (index_t i = 0; i < m.n_scalar; ++i) {
        double y = m.node_y(i);
        worst = std::max(worst, std::abs(sol[i] - (1.0 - y * y)));
        worst = std::max(worst, std::abs(sol[m.n_scalar + i]));
    }
    for (index_t i = 0; i < np; ++i) {
        double x = -1.0 + m.h * static_cast<double>(i % m.nq1);
        worst = std::max(worst, std::abs(sol[nv + i] - (2.0 - 2.0 * x)));
    }
    std::ostringstream d;
    d.precision(3);
    d << std::scientific << "     worst nodal error: " << worst << "\n";
    report(9, worst < 1e-8, "channel flow reproduced exactly from traction data", d.str());
}

void criterion_10() {
    const double betas[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    const double target[] = {1.1677, 10.1306, 37.7790, 59.6496, 67.1488, 68.8499};
    bool pass = false;
    std::ostringstream d;
    for (int l = 4; l <= 6; ++l) {
        ProblemSetup s(l);
        double e[6];
        bool monotone = true, conv = true;
        for (int i = 0; i < 6; ++i) {
            StokesControlResult r = solve_stokes_control(s, 1e-3, betas[i]);
            conv = conv && r.report.converged;
            e[i] = r.energy;
            if (i > 0 && e[i] <= e[i - 1]) monotone = false;
        }
        bool saturated = (e[5] - e[4]) / e[4] < 0.05;
        bool match = true;
        for (int i = 0; i < 6; ++i)
            if (std::abs(e[i] - target[i]) > 0.15 * target[i]) match = false;
        bool ok = conv && monotone && saturated && match;
        d << "     l=" << l << " energies:";
        for (double v : e) d << " " << v;
        d << (monotone ? "" : " [not monotone]") << (saturated ? "" : " [no saturation]")
          << (match ? " [matches source table]" : "") << "\n";
        pass = pass || ok;
    }
    report(10, pass, "control energy growth and saturation as the penalty shrinks", d.str());
}

void criterion_11() {
    // picard bands around the source table, per viscosity
    const double band_lo[] = {6, 7, 11, 13};
    const double band_hi[] = {10, 12, 18, 21};
    bool bands_ok = true, conv_ok = true, mono_ok = true;
    std::ostringstream d;
    for (int l = 2; l <= 5; ++l) {
        d << "     l=" << l << ":";
        index_t prev = 0;
        for (int i = 0; i < 4; ++i) {
            const NsCell& c = ns_cell(l, i);
            if (c.dash) {
                d << "  ---";
                continue;
            }
            if (!c.converged) {
                d << "  ERR(" << c.error << ")";
                conv_ok = false;
                continue;
            }
            d << "  " << c.picard << "(" << static_cast<index_t>(c.average_minres + 0.5)
              << ")";
            if (l >= 3) {
                if (static_cast<double>(c.picard) < band_lo[i] ||
                    static_cast<double>(c.picard) > band_hi[i]) {
                    bands_ok = false;
                    d << "*";
                }
                if (c.picard < prev) mono_ok = false;
                prev = c.picard;
            }
        }
        d << "\n";
    }
    bool dash_ok = ns_cell(2, 2).dash;
    d << "     cells flagged * fall outside the tabulated band\n"
      << "     divergence expected at (l=2, nu=1/20): " << (dash_ok ? "yes" : "no (converged)")
      << "\n";
    bool pass = bands_ok && conv_ok && mono_ok && dash_ok;
    report(11, pass, "nonlinear iteration counts with the permutational preconditioner",
           d.str());
}

void criterion_12() {
    // localization of the symmetric convection part for a divergence-free wind
    ProblemSetup s(3);
    Vec wx(s.mesh.n_scalar), wy(s.mesh.n_scalar, 0.0);
    for (index_t i = 0; i < s.mesh.n_scalar; ++i) {
        double y = s.mesh.node_y(i);
        wx[i] = 1.0 - y * y;
    }
    SparseMatrix nmat = assemble_convection(s.mesh, wx, wy);
    DenseMatrix sym = to_dense(symmetric_part(nmat));
    double off_support = 0.0;
    for (index_t i = 0; i < s.mesh.n_scalar; ++i)
        for (index_t j = 0; j < s.mesh.n_scalar; ++j) {
            bool i_edge = s.mesh.on_inflow_line(i) || s.mesh.on_outflow_line(i);
            bool j_edge = s.mesh.on_inflow_line(j) || s.mesh.on_outflow_line(j);
            if (!i_edge && !j_edge) off_support = std::max(off_support, std::abs(sym(i, j)));
        }
    // definiteness before and after the reduction, using a converged wind
    const NsCell& cell = ns_cell(2, 2);  // l=2, nu=1/20
    bool have_wind = !cell.wind_x.empty();
    int full_neg = -1, reduced_neg = -1;
    if (have_wind) {
        ProblemSetup s2(2);
        KktSystem k = build_oseen_kkt(s2.mesh, s2.stokes, s2.control, s2.targets, cell.wind_x,
                                      cell.wind_y, 1e-3, 1.0, 1.0 / 20.0);
        full_neg = sym_eig(to_dense(symmetric_part(k.F_s))).n_negative;
        PermutationPlan plan = plan_permutation(s2.mesh, k, 2);
        std::vector<bool> moved(s2.mesh.n_scalar, false);
        for (index_t nd : plan.selected_nodes) moved[nd] = true;
        SparseMatrix red = dirichlet_modify(k.F_s, moved);
        reduced_neg = sym_eig(to_dense(symmetric_part(red))).n_negative;
    }
    bool pass = off_support < 1e-12 && have_wind && full_neg >= 1 && reduced_neg == 0;
    std::ostringstream d;
    d.precision(3);
    d << std::scientific << "     off-support magnitude of the symmetric part: " << off_support
      << "\n";
    d << "     negative eigenvalues at nu=1/20, l=2: full " << full_neg << ", stride-2 reduced "
      << reduced_neg << "\n";
    report(12, pass, "convection symmetric part localizes and the reduction removes it",
           d.str());
}

void criterion_13() {
    bool pass = true;
    std::ostringstream d;
    d << "     l=3 energies over decreasing viscosity:";
    double prev = 1e300;
    for (int i = 0; i < 4; ++i) {
        const NsCell& c = ns_cell(3, i);
        if (!c.converged) {
            pass = false;
            d << " ERR";
            continue;
        }
        d << " " << c.energy;
        if (c.energy >= prev) pass = false;
        prev = c.energy;
    }
    d << "\n";
    report(13, pass, "nonlinear control energies decrease with the viscosity", d.str());
}

}  // namespace

int main() {
    std::printf("acceptance gate\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    criterion_13();
    std::printf("%d of 13 criteria failed\n", g_failures);
    return g_failures;
}
