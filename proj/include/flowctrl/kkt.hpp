// SPDX-License-Identifier: MIT
#pragma once

#include <vector>

#include "fem.hpp"
#include "mesh.hpp"
#include "sparse.hpp"

namespace flowctrl {

// 5x5 block optimality system, unknowns (v, p, u, lambda, mu):
//   [ Q_v   0     0     F^T   B^T ] [v]      [b]
//   [ 0     aQ_p  0     B     0   ] [p]      [a d]
//   [ 0     0     bQ_u  -Qh^T 0   ] [u]  =   [0]
//   [ F     B^T   -Qh   0     0   ] [l]      [0]
//   [ B     0     0     0     0   ] [m]      [0]
// B is the negative divergence (so the recovered pressure is the physical one);
// wall Dirichlet rows/columns are modified in place (unit diagonal), keeping
// all DOFs so N = 2 n_v + 2 n_p + n_u.
struct KktSystem {
    SparseMatrix mat;
    Vec rhs;
    double alpha = 0.0, beta = 0.0, nu = 0.0;
    index_t n_v = 0, n_p = 0, n_u = 0;  // block sizes
    index_t n_scalar = 0;

    // constituent blocks (post Dirichlet modification where applicable)
    SparseMatrix F_s;     // scalar F-hat (A-hat for Stokes, scaled by nu for Oseen)
    SparseMatrix Qv_s;    // scalar velocity mass (unmodified)
    SparseMatrix Qp;      // pressure mass (unscaled)
    SparseMatrix Qu_s;    // scalar control mass (unscaled)
    SparseMatrix B;       // n_p x n_v, wall columns zeroed
    SparseMatrix Qhat_v;  // n_v x n_u, wall rows zeroed

    index_t off_v() const { return 0; }
    index_t off_p() const { return n_v; }
    index_t off_u() const { return n_v + n_p; }
    index_t off_lambda() const { return n_v + n_p + n_u; }
    index_t off_mu() const { return 2 * n_v + n_p + n_u; }
    index_t total() const { return 2 * n_v + 2 * n_p + n_u; }
};

inline std::vector<bool> wall_mask(const ChannelMesh& m) {
    std::vector<bool> w(m.n_scalar, false);
    for (index_t i = 0; i < m.n_scalar; ++i) w[i] = m.is_wall(i);
    return w;
}

namespace detail {

// shared assembly: scalar F-hat is the Dirichlet-modified scalar (1,1) operator
inline KktSystem build_kkt_common(const ChannelMesh& m, const StokesBlocks& sb,
                                  const ControlBlocks& cb, const SparseMatrix& F_scalar_raw,
                                  const Vec& bv, double alpha, double beta, double nu,
                                  bool oseen) {
    if (alpha <= 0.0 || beta <= 0.0) throw ConfigError("alpha and beta must be positive");
    KktSystem k;
    k.alpha = alpha;
    k.beta = beta;
    k.nu = nu;
    k.n_scalar = m.n_scalar;
    k.n_v = 2 * m.n_scalar;
    k.n_p = m.n_p;
    k.n_u = 2 * static_cast<index_t>(m.inflow_nodes.size());
    auto wall = wall_mask(m);
    k.F_s = dirichlet_modify(F_scalar_raw, wall);
    k.Qv_s = sb.Qv_s;
    k.Qp = sb.Qp;
    k.Qu_s = cb.Qu_s;
    // B = -[Bx By], wall columns zeroed
    SparseMatrix Bneg = compose_blocks(m.n_p, k.n_v,
                                       {{0, 0, &sb.Bx, -1.0, false}, {0, m.n_scalar, &sb.By, -1.0, false}});
    std::vector<bool> wall2(k.n_v, false);
    for (index_t i = 0; i < m.n_scalar; ++i)
        if (wall[i]) wall2[i] = wall2[m.n_scalar + i] = true;
    k.B = zero_cols(std::move(Bneg), wall2);
    // Qhat vector block, wall rows zeroed (the two inflow corners)
    index_t nus = static_cast<index_t>(m.inflow_nodes.size());
    SparseMatrix Qhv = compose_blocks(k.n_v, k.n_u,
                                      {{0, 0, &cb.Qhat_s, 1.0, false},
                                       {m.n_scalar, nus, &cb.Qhat_s, 1.0, false}});
    k.Qhat_v = zero_rows(std::move(Qhv), wall2);

    index_t N = k.total();
    index_t ov = 0, op = k.n_v, ou = op + k.n_p, ol = ou + k.n_u, om = ol + k.n_v;
    std::vector<BlockEntry> blocks;
    // (1,1) Qv, (2,2) aQp, (3,3) bQu
    blocks.push_back({ov, ov, &k.Qv_s, 1.0, false});
    blocks.push_back({ov + m.n_scalar, ov + m.n_scalar, &k.Qv_s, 1.0, false});
    blocks.push_back({op, op, &k.Qp, alpha, false});
    blocks.push_back({ou, ou, &k.Qu_s, beta, false});
    blocks.push_back({ou + nus, ou + nus, &k.Qu_s, beta, false});
    // (1,4) F^T and (4,1) F
    bool tr = oseen;  // Stokes F is symmetric; for Oseen place F^T explicitly
    blocks.push_back({ov, ol, &k.F_s, 1.0, tr});
    blocks.push_back({ov + m.n_scalar, ol + m.n_scalar, &k.F_s, 1.0, tr});
    blocks.push_back({ol, ov, &k.F_s, 1.0, false});
    blocks.push_back({ol + m.n_scalar, ov + m.n_scalar, &k.F_s, 1.0, false});
    // (1,5) B^T, (5,1) B
    blocks.push_back({ov, om, &k.B, 1.0, true});
    blocks.push_back({om, ov, &k.B, 1.0, false});
    // (2,4) B, (4,2) B^T
    blocks.push_back({op, ol, &k.B, 1.0, false});
    blocks.push_back({ol, op, &k.B, 1.0, true});
    // (3,4) -Qh^T, (4,3) -Qh
    blocks.push_back({ou, ol, &k.Qhat_v, -1.0, true});
    blocks.push_back({ol, ou, &k.Qhat_v, -1.0, false});
    k.mat = compose_blocks(N, N, blocks);

    k.rhs.assign(N, 0.0);
    for (index_t i = 0; i < k.n_v; ++i) k.rhs[i] = bv[i];
    // alpha*d contribution is zero (desired pressure vanishes)
    return k;
}

}  // namespace detail

inline KktSystem build_stokes_kkt(const ChannelMesh& m, const StokesBlocks& sb,
                                  const ControlBlocks& cb, const Targets& t, double alpha,
                                  double beta) {
    return detail::build_kkt_common(m, sb, cb, sb.A_s, t.b, alpha, beta, 1.0, false);
}

inline KktSystem build_oseen_kkt(const ChannelMesh& m, const StokesBlocks& sb,
                                 const ControlBlocks& cb, const Targets& t, const Vec& wind_x,
                                 const Vec& wind_y, double alpha, double beta, double nu) {
    if (nu <= 0.0) throw ConfigError("nu must be positive");
    SparseMatrix N = assemble_convection(m, wind_x, wind_y);
    SparseMatrix F = add(N, sb.A_s, 1.0, nu);  // F = nu A + N
    return detail::build_kkt_common(m, sb, cb, F, t.b, alpha, beta, nu, true);
}

// Move both state-velocity components of every stride-th interior inflow node
// (wall corners excluded) next to the control block; adjoint DOFs stay put.
struct PermutationPlan {
    int stride = 0;
    std::vector<index_t> selected_nodes;  // scalar node ids
    std::vector<index_t> moved;           // velocity dof ids (x then y per node)
    std::vector<index_t> perm;            // permuted ordering: new -> old index
    index_t n33 = 0;                      // n = n_u + 2 * #selected
    index_t n_keep = 0;
};

inline PermutationPlan plan_permutation(const ChannelMesh& m, const KktSystem& k, int stride) {
    if (stride != 1 && stride != 2 && stride != 4 && stride != 6 && stride != 8)
        throw ConfigError("stride must be one of 1,2,4,6,8");
    PermutationPlan p;
    p.stride = stride;
    std::vector<index_t> inner;
    for (index_t nd : m.inflow_nodes)
        if (!m.is_wall(nd)) inner.push_back(nd);
    for (std::size_t i = 0; i < inner.size(); i += static_cast<std::size_t>(stride))
        p.selected_nodes.push_back(inner[i]);
    for (index_t nd : p.selected_nodes) {
        p.moved.push_back(nd);
        p.moved.push_back(m.n_scalar + nd);
    }
    p.n33 = k.n_u + static_cast<index_t>(p.moved.size());
    std::vector<bool> is_moved(k.n_v, false);
    for (index_t i : p.moved) is_moved[i] = true;
    // new order: v_keep, p, u, v_moved, lambda, mu
    for (index_t i = 0; i < k.n_v; ++i)
        if (!is_moved[i]) p.perm.push_back(i);
    p.n_keep = static_cast<index_t>(p.perm.size());
    for (index_t i = k.off_p(); i < k.off_u() + k.n_u; ++i) p.perm.push_back(i);
    for (index_t i : p.moved) p.perm.push_back(i);
    for (index_t i = k.off_lambda(); i < k.total(); ++i) p.perm.push_back(i);
    return p;
}

struct PermutedSystem {
    SparseMatrix permuted;  // P A P^T
    SparseMatrix dropped;   // permuted with fill outside the block blueprint zeroed
    Vec rhs;                // P c
};

// Block id in the permuted partition [v_keep, p, (u,v_moved), lambda, mu]
inline int permuted_block_of(const KktSystem& k, const PermutationPlan& p, index_t i) {
    if (i < p.n_keep) return 1;
    i -= p.n_keep;
    if (i < k.n_p) return 2;
    i -= k.n_p;
    if (i < p.n33) return 3;
    i -= p.n33;
    if (i < k.n_v) return 4;
    return 5;
}

inline PermutedSystem apply_permutation_and_drop(const KktSystem& k, const PermutationPlan& p) {
    PermutedSystem r;
    r.permuted = permute_symmetric(k.mat, p.perm);
    r.rhs.resize(k.total());
    for (index_t i = 0; i < k.total(); ++i) r.rhs[i] = k.rhs[p.perm[i]];
    // allowed block pairs mirror the unpermuted 5x5 pattern
    static const bool allowed[6][6] = {
        {false, false, false, false, false, false},
        {false, true, false, false, true, true},
        {false, false, true, false, true, false},
        {false, false, false, true, true, false},
        {false, true, true, true, false, false},
        {false, true, false, false, false, false},
    };
    r.dropped = r.permuted;
    for (index_t i = 0; i < r.dropped.nrows; ++i) {
        int bi = permuted_block_of(k, p, i);
        for (index_t kk = r.dropped.row_ptr[i]; kk < r.dropped.row_ptr[i + 1]; ++kk) {
            int bj = permuted_block_of(k, p, r.dropped.col_idx[kk]);
            if (!allowed[bi][bj]) r.dropped.values[kk] = 0.0;
        }
    }
    return r;
}

}  // namespace flowctrl
