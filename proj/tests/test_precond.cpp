// SPDX-License-Identifier: MIT
// Preconditioner components: Chebyshev mass solves, the geometric multigrid
// velocity solve, the fixed-step Uzawa sweep, and the block preconditioners.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "flowctrl/analysis.hpp"
#include "flowctrl/precond.hpp"
#include "flowctrl/solver.hpp"

using namespace flowctrl;

namespace {

Vec random_vec(index_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> d;
    Vec v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("chebyshev mass solves reach tabulated accuracy at 20 steps", "[chebyshev]") {
    // condition numbers of the preconditioned mass matrices
    SpectrumReport rv = mass_spectrum_report(MassKind::Qv, 3, 20);
    SpectrumReport rp = mass_spectrum_report(MassKind::Qp, 3, 20);
    SpectrumReport ru = mass_spectrum_report(MassKind::Qu, 3, 20);
    CHECK(rv.condition_number - 1.0 < 5e-7);
    CHECK(rp.condition_number - 1.0 < 1e-5);
    CHECK(ru.condition_number - 1.0 < 1e-11);
    CHECK(rv.condition_number >= 1.0 - 1e-12);
    CHECK(rp.condition_number >= 1.0 - 1e-12);
    CHECK(ru.condition_number >= 1.0 - 1e-12);
}

TEST_CASE("chebyshev accuracy improves with more steps", "[chebyshev]") {
    double k5 = mass_spectrum_report(MassKind::Qp, 3, 5).condition_number;
    double k10 = mass_spectrum_report(MassKind::Qp, 3, 10).condition_number;
    double k20 = mass_spectrum_report(MassKind::Qp, 3, 20).condition_number;
    CHECK(k10 - 1.0 < 0.5 * (k5 - 1.0));
    CHECK(k20 - 1.0 < 0.5 * (k10 - 1.0));
}

TEST_CASE("multigrid is spectrally close to the exact laplacian inverse", "[multigrid]") {
    MultigridOp mg(4);
    const SparseMatrix& a = mg.finest_matrix();
    index_t n = a.nrows;
    // dense representation of M^{-1} A
    DenseMatrix ma(n, n);
    for (index_t j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        Vec col = mg.apply(spmv(a, e));
        for (index_t i = 0; i < n; ++i) ma(i, j) = col[i];
    }
    // eigenvalues of M^{-1} A through the symmetric similarity via sym part
    detail::symmetrize(ma);
    SpectrumReport r = sym_eig(ma);
    CHECK(r.min > 0.5);
    CHECK(r.max < 1.5);
}

TEST_CASE("a single v-cycle contracts the residual", "[multigrid]") {
    MultigridOp mg1(4, {1, 0.8, 2});
    const SparseMatrix& a = mg1.finest_matrix();
    index_t n = a.nrows;
    Vec b = random_vec(n, 7);
    Vec x = mg1.apply(b);
    Vec ax = spmv(a, x);
    double rnorm = 0.0, bnorm = 0.0;
    for (index_t i = 0; i < n; ++i) {
        rnorm += (b[i] - ax[i]) * (b[i] - ax[i]);
        bnorm += b[i] * b[i];
    }
    CHECK(std::sqrt(rnorm / bnorm) < 0.5);
    // five cycles contract much further
    MultigridOp mg5(4, {5, 0.8, 2});
    Vec x5 = mg5.apply(b);
    Vec ax5 = spmv(a, x5);
    double r5 = 0.0;
    for (index_t i = 0; i < n; ++i) r5 += (b[i] - ax5[i]) * (b[i] - ax5[i]);
    CHECK(std::sqrt(r5 / bnorm) < 1e-3);
}

TEST_CASE("multigrid rejects levels below the coarse grid", "[multigrid]") {
    CHECK_THROWS_AS(MultigridOp(1), ConfigError);
}

TEST_CASE("uzawa sweep is linear and fixed", "[uzawa]") {
    ProblemSetup s(2);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-3, 1e-3);
    StokesPrecond pc(s.mesh, k);
    const UzawaOp& w = pc.uzawa();
    index_t n = k.n_v + k.n_p;
    Vec a = random_vec(n, 21), b = random_vec(n, 22);
    Vec ab(n);
    for (index_t i = 0; i < n; ++i) ab[i] = 2.0 * a[i] - 3.0 * b[i];
    Vec wa = w.forward(a), wb = w.forward(b), wab = w.forward(ab);
    for (index_t i = 0; i < n; ++i)
        CHECK(wab[i] == Catch::Approx(2.0 * wa[i] - 3.0 * wb[i]).margin(1e-10));
    // deterministic: same input, same output
    Vec wa2 = w.forward(a);
    for (index_t i = 0; i < n; ++i) CHECK(wa2[i] == wa[i]);
    // zero maps to zero
    Vec z = w.forward(Vec(n, 0.0));
    for (index_t i = 0; i < n; ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("uzawa adjoint is the exact transpose of the forward sweep", "[uzawa]") {
    ProblemSetup s(2);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-3, 1e-3);
    StokesPrecond pc(s.mesh, k);
    const UzawaOp& w = pc.uzawa();
    index_t n = k.n_v + k.n_p;
    for (unsigned seed = 31; seed < 34; ++seed) {
        Vec a = random_vec(n, seed), b = random_vec(n, seed + 10);
        double lhs = dot(w.forward(a), b);
        double rhs = dot(a, w.adjoint(b));
        CHECK(lhs == Catch::Approx(rhs).epsilon(1e-11));
    }
}

TEST_CASE("uzawa accuracy improves with more steps", "[uzawa]") {
    double eta5 = braess_peisker_eta(3, 5);
    double eta10 = braess_peisker_eta(3, 10);
    CHECK(eta10 < eta5);
    CHECK(eta5 < 0.5);
    CHECK(eta10 < 0.05);
}

TEST_CASE("stokes preconditioner is symmetric positive definite", "[precond]") {
    ProblemSetup s(3);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-3, 1e-3);
    StokesPrecond pc(s.mesh, k);
    index_t n = k.total();
    for (unsigned seed = 41; seed < 44; ++seed) {
        Vec x = random_vec(n, seed), y = random_vec(n, seed + 100);
        Vec px = pc.apply(x), py = pc.apply(y);
        CHECK(dot(px, y) == Catch::Approx(dot(x, py)).epsilon(1e-10));
        CHECK(dot(x, px) > 0.0);
    }
}

TEST_CASE("element elimination spectra match the closed-form table", "[precond]") {
    struct Row {
        std::vector<int> pattern;
        double min_eig;
    };
    const Row rows[] = {
        {{}, 0.2500},          {{1}, 0.3125},    {{4}, 0.3125},
        {{1, 4}, 0.3506},      {{1, 7}, 0.3506}, {{1, 5, 7}, 0.3750},
    };
    for (const Row& row : rows) {
        SpectrumReport r = element_elimination_eigs(row.pattern);
        CHECK(r.min == Catch::Approx(row.min_eig).margin(1e-4));
        CHECK(r.max == Catch::Approx(1.5625).margin(1e-4));
    }
    CHECK_THROWS_AS(element_elimination_eigs({2}), ConfigError);
    CHECK_THROWS_AS(element_elimination_eigs({1, 2, 3}), ConfigError);
}

TEST_CASE("reduced element minima agree with direct local removal", "[precond]") {
    // local corner/edge labels used by the reduced Chebyshev bound
    CHECK(element_mass_min_eig({}) == Catch::Approx(0.25).margin(1e-12));
    CHECK(element_mass_min_eig({0}) == Catch::Approx(element_mass_min_eig({6})).margin(1e-12));
    CHECK(element_mass_min_eig({3}) > element_mass_min_eig({}));
    CHECK(element_mass_min_eig({0, 3, 6}) == Catch::Approx(0.375).margin(1e-4));
}

TEST_CASE("permutational preconditioner reports sane scalings", "[precond]") {
    ProblemSetup s(3);
    Vec zero(s.mesh.n_scalar, 0.0);
    KktSystem k = build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, zero, zero, 1e-3,
                                  1.0, 0.1);
    PermutationPlan plan = plan_permutation(s.mesh, k, 1);
    PermPrecond pc(s.mesh, k, plan);
    CHECK(pc.reduced_fs_lambda_min() > 0.0);
    // untouched interior elements pin the lower bound at the full-grid value
    CHECK(pc.cheb_theta() == Catch::Approx(0.25).margin(1e-12));
    CHECK(pc.atilde_dmax() >= 1.0);
    CHECK(pc.schur_scale() > 0.0);
    // stride 2 removes fewer nodes per element, never a worse bound than full
    PermutationPlan plan2 = plan_permutation(s.mesh, k, 2);
    PermPrecond pc2(s.mesh, k, plan2);
    CHECK(pc2.cheb_theta() >= 0.25 - 1e-12);
}

TEST_CASE("permutational preconditioner is symmetric positive definite", "[precond]") {
    ProblemSetup s(2);
    Vec zero(s.mesh.n_scalar, 0.0);
    KktSystem k = build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, zero, zero, 1e-3,
                                  1.0, 0.1);
    PermutationPlan plan = plan_permutation(s.mesh, k, 1);
    PermPrecond pc(s.mesh, k, plan);
    index_t n = k.total();
    for (unsigned seed = 51; seed < 54; ++seed) {
        Vec x = random_vec(n, seed), y = random_vec(n, seed + 100);
        Vec px = pc.apply(x), py = pc.apply(y);
        CHECK(dot(px, y) == Catch::Approx(dot(x, py)).epsilon(1e-9));
        CHECK(dot(x, px) > 0.0);
    }
}

TEST_CASE("strongly convective reduced operator is flagged as indefinite", "[precond]") {
    // a reversed channel wind puts the negative boundary term on the right
    // edge, which the permutation never removes; with a small viscosity the
    // symmetric part of the reduced operator turns indefinite
    ProblemSetup s(3);
    Vec wx(s.mesh.n_scalar, 0.0), wy(s.mesh.n_scalar, 0.0);
    for (index_t i = 0; i < s.mesh.n_scalar; ++i) {
        double y = s.mesh.node_y(i);
        wx[i] = -4.0 * (1.0 - y * y);
    }
    KktSystem k = build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, wx, wy, 1e-3, 1.0,
                                  1e-3);
    PermutationPlan plan = plan_permutation(s.mesh, k, 1);
    CHECK_THROWS_AS(PermPrecond(s.mesh, k, plan), DivergenceError);
}

TEST_CASE("ideal block preconditioner clusters minres to a few steps", "[precond]") {
    // with the exact Schur complement the preconditioned matrix has three
    // eigenvalues, so minres converges in a handful of iterations
    ProblemSetup s(2);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, 1e-2, 1e-2);
    index_t n1 = k.n_v + k.n_p + k.n_u, n = k.total(), n2 = n - n1;
    DenseMatrix a = to_dense(k.mat);
    DenseMatrix a11(n1, n1);
    for (index_t i = 0; i < n1; ++i)
        for (index_t j = 0; j < n1; ++j) a11(i, j) = a(i, j);
    DenseMatrix bm(n2, n1);
    for (index_t i = 0; i < n2; ++i)
        for (index_t j = 0; j < n1; ++j) bm(i, j) = a(n1 + i, j);
    DenseMatrix l = cholesky(a11);
    DenseMatrix sch(n2, n2);
    for (index_t j = 0; j < n2; ++j) {
        Vec col(n1);
        for (index_t i = 0; i < n1; ++i) col[i] = bm(j, i);
        col = cholesky_solve(l, std::move(col));
        for (index_t i = 0; i < n2; ++i) {
            double v = 0.0;
            for (index_t kk = 0; kk < n1; ++kk) v += bm(i, kk) * col[kk];
            sch(i, j) = v;
        }
    }
    detail::symmetrize(sch);
    DenseMatrix prec = detail::blkdiag2(a11, sch);
    LuFactors plu = lu_factor(prec);
    SolveReport rep;
    MinresOptions opt;
    opt.tol = 1e-10;
    opt.maxit = 50;
    Vec b = random_vec(n, 61);
    minres([&k](const Vec& x) { return spmv(k.mat, x); },
           [&plu](const Vec& r) { return lu_solve(plu, r); }, b, rep, opt);
    REQUIRE(rep.converged);
    CHECK(rep.iterations <= 6);
}

TEST_CASE("murphy spectrum collapses onto the golden-ratio cluster", "[precond]") {
    SpectrumReport r = murphy_ideal_check(2, 1e-2, 1e-2, true);
    CHECK(murphy_cluster_distance(r) < 1e-8);
    // the inexpensive Schur substitute stays close for large beta
    SpectrumReport rt = murphy_ideal_check(2, 1e-2, 1e6, false);
    CHECK(murphy_cluster_distance(rt) < 1e-3);
}
