// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>

#include "mesh.hpp"
#include "sparse.hpp"

namespace flowctrl {

// 3-point Gauss-Legendre on [-1,1]
struct Gauss3 {
    static constexpr std::array<double, 3> x = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
};

// 1D Q2 shape functions on [-1,1], nodes -1,0,1
inline void shape_q2(double x, std::array<double, 3>& v, std::array<double, 3>& d) {
    v = {x * (x - 1.0) / 2.0, (1.0 - x) * (1.0 + x), x * (x + 1.0) / 2.0};
    d = {x - 0.5, -2.0 * x, x + 0.5};
}

inline void shape_q1(double x, std::array<double, 2>& v) {
    v = {(1.0 - x) / 2.0, (1.0 + x) / 2.0};
}

struct StokesBlocks {
    SparseMatrix A_s;   // scalar Laplacian (no boundary conditions applied)
    SparseMatrix Qv_s;  // scalar velocity mass
    SparseMatrix Qp;    // pressure mass
    SparseMatrix Bx;    // n_p x n_scalar, rows of integral(psi d/dx phi)
    SparseMatrix By;
};

inline StokesBlocks assemble_stokes_blocks(const ChannelMesh& m) {
    const double J = m.h / 2.0;
    std::vector<Triplet> tA, tQ, tQp, tBx, tBy;
    for (index_t ey = 0; ey < m.elements_per_side; ++ey)
        for (index_t ex = 0; ex < m.elements_per_side; ++ex) {
            auto n2 = m.q2_element_nodes(ex, ey);
            auto n1 = m.q1_element_nodes(ex, ey);
            double Ae[9][9] = {}, Qe[9][9] = {}, Qpe[4][4] = {}, Bxe[4][9] = {}, Bye[4][9] = {};
            for (int gx = 0; gx < 3; ++gx)
                for (int gy = 0; gy < 3; ++gy) {
                    double wq = Gauss3::w[gx] * Gauss3::w[gy] * J * J;
                    std::array<double, 3> vx, dx, vy, dy;
                    shape_q2(Gauss3::x[gx], vx, dx);
                    shape_q2(Gauss3::x[gy], vy, dy);
                    std::array<double, 2> ux, uy;
                    shape_q1(Gauss3::x[gx], ux);
                    shape_q1(Gauss3::x[gy], uy);
                    double N2[9], Ndx[9], Ndy[9], N1[4];
                    for (int jy = 0; jy < 3; ++jy)
                        for (int jx = 0; jx < 3; ++jx) {
                            int j = jy * 3 + jx;
                            N2[j] = vx[jx] * vy[jy];
                            Ndx[j] = dx[jx] * vy[jy] / J;
                            Ndy[j] = vx[jx] * dy[jy] / J;
                        }
                    for (int jy = 0; jy < 2; ++jy)
                        for (int jx = 0; jx < 2; ++jx) N1[jy * 2 + jx] = ux[jx] * uy[jy];
                    for (int a = 0; a < 9; ++a)
                        for (int b = 0; b < 9; ++b) {
                            Ae[a][b] += wq * (Ndx[a] * Ndx[b] + Ndy[a] * Ndy[b]);
                            Qe[a][b] += wq * N2[a] * N2[b];
                        }
                    for (int a = 0; a < 4; ++a) {
                        for (int b = 0; b < 4; ++b) Qpe[a][b] += wq * N1[a] * N1[b];
                        for (int b = 0; b < 9; ++b) {
                            Bxe[a][b] += wq * N1[a] * Ndx[b];
                            Bye[a][b] += wq * N1[a] * Ndy[b];
                        }
                    }
                }
            for (int a = 0; a < 9; ++a)
                for (int b = 0; b < 9; ++b) {
                    tA.push_back({n2[a], n2[b], Ae[a][b]});
                    tQ.push_back({n2[a], n2[b], Qe[a][b]});
                }
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) tQp.push_back({n1[a], n1[b], Qpe[a][b]});
                for (int b = 0; b < 9; ++b) {
                    tBx.push_back({n1[a], n2[b], Bxe[a][b]});
                    tBy.push_back({n1[a], n2[b], Bye[a][b]});
                }
            }
        }
    StokesBlocks r;
    r.A_s = from_triplets(m.n_scalar, m.n_scalar, std::move(tA));
    r.Qv_s = from_triplets(m.n_scalar, m.n_scalar, std::move(tQ));
    r.Qp = from_triplets(m.n_p, m.n_p, std::move(tQp));
    r.Bx = from_triplets(m.n_p, m.n_scalar, std::move(tBx));
    r.By = from_triplets(m.n_p, m.n_scalar, std::move(tBy));
    return r;
}

struct ControlBlocks {
    SparseMatrix Qu_s;   // scalar 1D Q2 mass on the inflow (size nq2)
    SparseMatrix Qhat_s; // n_scalar x nq2, row inflow_nodes[i] = row i of Qu_s
};

inline ControlBlocks assemble_control_blocks(const ChannelMesh& m) {
    const double J = m.h / 2.0;
    index_t nu = static_cast<index_t>(m.inflow_nodes.size());
    std::vector<Triplet> tQu;
    for (index_t e = 0; e < m.elements_per_side; ++e) {
        index_t nodes[3] = {2 * e, 2 * e + 1, 2 * e + 2};
        double Me[3][3] = {};
        for (int g = 0; g < 3; ++g) {
            std::array<double, 3> v, d;
            shape_q2(Gauss3::x[g], v, d);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) Me[a][b] += Gauss3::w[g] * J * v[a] * v[b];
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) tQu.push_back({nodes[a], nodes[b], Me[a][b]});
    }
    ControlBlocks r;
    r.Qu_s = from_triplets(nu, nu, std::move(tQu));
    std::vector<Triplet> tQh;
    for (index_t i = 0; i < nu; ++i) {
        index_t nd = m.inflow_nodes[i];
        for (index_t k = r.Qu_s.row_ptr[i]; k < r.Qu_s.row_ptr[i + 1]; ++k)
            tQh.push_back({nd, r.Qu_s.col_idx[k], r.Qu_s.values[k]});
    }
    r.Qhat_s = from_triplets(m.n_scalar, nu, std::move(tQh));
    return r;
}

// N_s[i][j] = integral (w . grad phi_j) phi_i with discrete Q2 wind (wx, wy)
inline SparseMatrix assemble_convection(const ChannelMesh& m, const Vec& wx, const Vec& wy) {
    if (static_cast<index_t>(wx.size()) != m.n_scalar ||
        static_cast<index_t>(wy.size()) != m.n_scalar)
        throw DimensionError("assemble_convection: wind size");
    const double J = m.h / 2.0;
    std::vector<Triplet> tN;
    for (index_t ey = 0; ey < m.elements_per_side; ++ey)
        for (index_t ex = 0; ex < m.elements_per_side; ++ex) {
            auto n2 = m.q2_element_nodes(ex, ey);
            double Ne[9][9] = {};
            for (int gx = 0; gx < 3; ++gx)
                for (int gy = 0; gy < 3; ++gy) {
                    double wq = Gauss3::w[gx] * Gauss3::w[gy] * J * J;
                    std::array<double, 3> vx, dx, vy, dy;
                    shape_q2(Gauss3::x[gx], vx, dx);
                    shape_q2(Gauss3::x[gy], vy, dy);
                    double N2[9], Ndx[9], Ndy[9];
                    for (int jy = 0; jy < 3; ++jy)
                        for (int jx = 0; jx < 3; ++jx) {
                            int j = jy * 3 + jx;
                            N2[j] = vx[jx] * vy[jy];
                            Ndx[j] = dx[jx] * vy[jy] / J;
                            Ndy[j] = vx[jx] * dy[jy] / J;
                        }
                    double wxg = 0.0, wyg = 0.0;
                    for (int j = 0; j < 9; ++j) {
                        wxg += wx[n2[j]] * N2[j];
                        wyg += wy[n2[j]] * N2[j];
                    }
                    for (int a = 0; a < 9; ++a)
                        for (int b = 0; b < 9; ++b)
                            Ne[a][b] += wq * (wxg * Ndx[b] + wyg * Ndy[b]) * N2[a];
                }
            for (int a = 0; a < 9; ++a)
                for (int b = 0; b < 9; ++b) tN.push_back({n2[a], n2[b], Ne[a][b]});
        }
    return from_triplets(m.n_scalar, m.n_scalar, std::move(tN));
}

// desired velocity: v̂_x(y) = 4y - 4y² for y in [0,1), else 0; v̂_y = 0
inline double target_vx(double y) { return (y >= 0.0 && y < 1.0) ? 4.0 * y - 4.0 * y * y : 0.0; }

struct Targets {
    Vec b;  // length n_v = 2 n_scalar
    Vec d;  // length n_p (zero: desired pressure vanishes)
};

inline Targets build_targets(const ChannelMesh& m) {
    const double J = m.h / 2.0;
    Targets t;
    t.b.assign(2 * m.n_scalar, 0.0);
    t.d.assign(m.n_p, 0.0);
    for (index_t ey = 0; ey < m.elements_per_side; ++ey)
        for (index_t ex = 0; ex < m.elements_per_side; ++ex) {
            auto n2 = m.q2_element_nodes(ex, ey);
            for (int gx = 0; gx < 3; ++gx)
                for (int gy = 0; gy < 3; ++gy) {
                    double y = -1.0 + m.h * static_cast<double>(ey) + m.h * (Gauss3::x[gy] + 1.0) / 2.0;
                    double vh = target_vx(y);
                    if (vh == 0.0) continue;
                    double wq = Gauss3::w[gx] * Gauss3::w[gy] * J * J;
                    std::array<double, 3> vx, dx, vy, dy;
                    shape_q2(Gauss3::x[gx], vx, dx);
                    shape_q2(Gauss3::x[gy], vy, dy);
                    for (int jy = 0; jy < 3; ++jy)
                        for (int jx = 0; jx < 3; ++jx)
                            t.b[n2[jy * 3 + jx]] += wq * vh * vx[jx] * vy[jy];
                }
        }
    return t;
}

}  // namespace flowctrl
