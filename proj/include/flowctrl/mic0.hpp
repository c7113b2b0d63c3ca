// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "sparse.hpp"
#include "vec.hpp"

namespace flowctrl {

// Modified incomplete Cholesky MIC(0): U^T U on the sparsity of triu(A), with
// Gustafsson row-sum compensation (fill dropped outside the pattern is
// subtracted from the two diagonal entries of its row/column).
class Mic0 {
  public:
    Mic0() = default;

    // factorize; throws FactorizationError after shift retries are exhausted
    explicit Mic0(const SparseMatrix& a, int max_retries = 3) {
        if (a.nrows != a.ncols) throw DimensionError("mic0: not square");
        double shift = 0.0;
        for (int attempt = 0; attempt <= max_retries; ++attempt) {
            if (try_factor(a, shift)) return;
            shift = (shift == 0.0) ? 1e-8 : shift * 100.0;
        }
        throw FactorizationError("mic0: breakdown persists after diagonal shifts");
    }

    // (U^T U)^{-1} r
    Vec apply(const Vec& r) const { return usolve(lsolve(r)); }

    // forward solve with U^T (lower triangular)
    Vec lsolve(const Vec& r) const {
        index_t n = static_cast<index_t>(row_ptr_.size()) - 1;
        Vec y = r;
        for (index_t k = 0; k < n; ++k) {
            y[k] /= values_[diag_pos_[k]];
            double yk = y[k];
            for (index_t j = diag_pos_[k] + 1; j < row_ptr_[k + 1]; ++j)
                y[col_idx_[j]] -= values_[j] * yk;
        }
        return y;
    }

    // back solve with U (upper triangular)
    Vec usolve(const Vec& r) const {
        index_t n = static_cast<index_t>(row_ptr_.size()) - 1;
        Vec y = r;
        for (index_t k = n - 1; k >= 0; --k) {
            double s = y[k];
            for (index_t j = diag_pos_[k] + 1; j < row_ptr_[k + 1]; ++j)
                s -= values_[j] * y[col_idx_[j]];
            y[k] = s / values_[diag_pos_[k]];
        }
        return y;
    }

    double applied_shift() const { return shift_used_; }

  private:
    bool try_factor(const SparseMatrix& a, double shift) {
        index_t n = a.nrows;
        // upper-triangular part in CSR
        row_ptr_.assign(n + 1, 0);
        col_idx_.clear();
        values_.clear();
        diag_pos_.assign(n, -1);
        for (index_t i = 0; i < n; ++i) {
            for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                index_t j = a.col_idx[k];
                if (j < i) continue;
                if (j == i) diag_pos_[i] = static_cast<index_t>(col_idx_.size());
                col_idx_.push_back(j);
                values_.push_back(a.values[k] +
                                  (j == i ? shift * std::abs(a.values[k]) : 0.0));
            }
            row_ptr_[i + 1] = static_cast<index_t>(col_idx_.size());
            if (diag_pos_[i] < 0) return false;  // structurally missing diagonal
        }
        // position lookup per row
        std::vector<std::unordered_map<index_t, index_t>> pos(n);
        for (index_t i = 0; i < n; ++i)
            for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) pos[i][col_idx_[k]] = k;
        for (index_t k = 0; k < n; ++k) {
            double& dk = values_[diag_pos_[k]];
            if (dk <= 0.0) return false;
            dk = std::sqrt(dk);
            for (index_t j = diag_pos_[k] + 1; j < row_ptr_[k + 1]; ++j) values_[j] /= dk;
            for (index_t aa = diag_pos_[k] + 1; aa < row_ptr_[k + 1]; ++aa) {
                index_t i = col_idx_[aa];
                double uki = values_[aa];
                for (index_t bb = aa; bb < row_ptr_[k + 1]; ++bb) {
                    index_t j = col_idx_[bb];
                    double v = uki * values_[bb];
                    auto it = pos[i].find(j);
                    if (it != pos[i].end()) {
                        values_[it->second] -= v;
                    } else {
                        // dropped fill: row-sum modification onto the diagonals
                        values_[diag_pos_[i]] -= v;
                        values_[diag_pos_[j]] -= v;
                    }
                }
            }
        }
        shift_used_ = shift;
        return true;
    }

    std::vector<index_t> row_ptr_, col_idx_, diag_pos_;
    Vec values_;
    double shift_used_ = 0.0;
};

}  // namespace flowctrl
