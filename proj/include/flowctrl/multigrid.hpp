// SPDX-License-Identifier: MIT
#pragma once

#include <memory>
#include <vector>

#include "dense.hpp"
#include "fem.hpp"
#include "kkt.hpp"
#include "mesh.hpp"
#include "sparse.hpp"

namespace flowctrl {

// nested Q2 nodal interpolation from the mesh one level down
inline SparseMatrix q2_prolongation(const ChannelMesh& coarse, const ChannelMesh& fine) {
    std::vector<Triplet> t;
    for (index_t ey = 0; ey < coarse.elements_per_side; ++ey)
        for (index_t ex = 0; ex < coarse.elements_per_side; ++ex) {
            auto nodes = coarse.q2_element_nodes(ex, ey);
            double x0 = -1.0 + coarse.h * static_cast<double>(ex);
            double y0 = -1.0 + coarse.h * static_cast<double>(ey);
            for (index_t fy = 4 * ey; fy <= 4 * ey + 4; ++fy)
                for (index_t fx = 4 * ex; fx <= 4 * ex + 4; ++fx) {
                    double xf = -1.0 + static_cast<double>(fx) * fine.h / 2.0;
                    double yf = -1.0 + static_cast<double>(fy) * fine.h / 2.0;
                    double xi = 2.0 * (xf - x0) / coarse.h - 1.0;
                    double eta = 2.0 * (yf - y0) / coarse.h - 1.0;
                    std::array<double, 3> vx, dx, vy, dy;
                    shape_q2(xi, vx, dx);
                    shape_q2(eta, vy, dy);
                    for (int jy = 0; jy < 3; ++jy)
                        for (int jx = 0; jx < 3; ++jx) {
                            double val = vx[jx] * vy[jy];
                            if (std::abs(val) > 1e-14)
                                t.push_back({fy * fine.nq2 + fx, nodes[jy * 3 + jx], val});
                        }
                }
        }
    // element-overlapping fine nodes get written by multiple coarse elements
    // with identical values; coalesce then rescale duplicates back to nodal values
    SparseMatrix p(fine.n_scalar, coarse.n_scalar);
    {
        // deduplicate: keep a single value per (row, col)
        std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        std::vector<Triplet> u;
        for (std::size_t i = 0; i < t.size();) {
            std::size_t j = i;
            while (j < t.size() && t[j].row == t[i].row && t[j].col == t[i].col) ++j;
            u.push_back(t[i]);
            i = j;
        }
        p = from_triplets(fine.n_scalar, coarse.n_scalar, std::move(u));
    }
    return p;
}

struct MultigridConfig {
    int cycles = 5;
    double omega = 0.8;  // damped-Jacobi weight
    int smooth_steps = 2;
};

// Fixed-cycle geometric V-cycle preconditioner for the Dirichlet-modified
// scalar Q2 Laplacian; coarsest level (l=2) solved directly.
class MultigridOp {
  public:
    MultigridOp() = default;
    MultigridOp(int level, MultigridConfig cfg = {}) : cfg_(cfg) {
        if (level < 2) throw ConfigError("multigrid: level must be >= 2");
        for (int l = 2; l <= level; ++l) {
            meshes_.emplace_back(std::make_unique<ChannelMesh>(l));
            StokesBlocks sb = assemble_stokes_blocks(*meshes_.back());
            mats_.push_back(dirichlet_modify(sb.A_s, wall_mask(*meshes_.back())));
            diags_.push_back(diagonal(mats_.back()));
        }
        for (std::size_t i = 0; i + 1 < meshes_.size(); ++i) {
            SparseMatrix p = q2_prolongation(*meshes_[i], *meshes_[i + 1]);
            // wall rows (fine) and wall columns (coarse) zeroed, preserving
            // the Dirichlet subspace
            std::vector<bool> wf = wall_mask(*meshes_[i + 1]);
            std::vector<bool> wc = wall_mask(*meshes_[i]);
            p = zero_rows(std::move(p), wf);
            p = zero_cols(std::move(p), wc);
            prolong_.push_back(std::move(p));
        }
        coarse_lu_ = lu_factor(to_dense(mats_[0]));
    }

    // one application: cfg.cycles V-cycles on A x = r from a zero start
    Vec apply(const Vec& r) const {
        const SparseMatrix& a = mats_.back();
        Vec x(r.size(), 0.0), res(r.size());
        for (int c = 0; c < cfg_.cycles; ++c) {
            spmv(a, x, res);
            for (std::size_t i = 0; i < r.size(); ++i) res[i] = r[i] - res[i];
            Vec dx = vcycle(static_cast<int>(mats_.size()) - 1, res);
            axpy(1.0, dx, x);
        }
        return x;
    }

    const SparseMatrix& finest_matrix() const { return mats_.back(); }

  private:
    Vec vcycle(int k, const Vec& r) const {
        if (k == 0) return lu_solve(coarse_lu_, r);
        const SparseMatrix& a = mats_[k];
        const Vec& d = diags_[k];
        index_t n = a.nrows;
        Vec x(n, 0.0), ax;
        for (int s = 0; s < cfg_.smooth_steps; ++s) {
            spmv(a, x, ax);
            for (index_t i = 0; i < n; ++i) x[i] += cfg_.omega * (r[i] - ax[i]) / d[i];
        }
        spmv(a, x, ax);
        Vec res(n);
        for (index_t i = 0; i < n; ++i) res[i] = r[i] - ax[i];
        Vec rc = spmv(prolong_[k - 1], res, true);
        Vec xc = vcycle(k - 1, rc);
        Vec px = spmv(prolong_[k - 1], xc);
        axpy(1.0, px, x);
        for (int s = 0; s < cfg_.smooth_steps; ++s) {
            spmv(a, x, ax);
            for (index_t i = 0; i < n; ++i) x[i] += cfg_.omega * (r[i] - ax[i]) / d[i];
        }
        return x;
    }

    MultigridConfig cfg_;
    std::vector<std::unique_ptr<ChannelMesh>> meshes_;
    std::vector<SparseMatrix> mats_;
    std::vector<Vec> diags_;
    std::vector<SparseMatrix> prolong_;
    LuFactors coarse_lu_;
};

}  // namespace flowctrl
