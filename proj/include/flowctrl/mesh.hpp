// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <vector>

#include "errors.hpp"
#include "vec.hpp"

namespace flowctrl {

enum class NodeClass { Interior, Wall, Inflow, Outflow };

// Uniform grid on (-1,1)^2, Q2 velocity / Q1 pressure nodes, lexicographic by
// (y, then x): idx = iy*nq2 + ix. Element-local Q2 numbering: corners 1,3,7,9,
// edge midpoints 2,4,6,8, center 5 (1-based, bottom-left first).
struct ChannelMesh {
    int level = 0;
    index_t elements_per_side = 0;
    double h = 0.0;       // element size
    index_t nq2 = 0;      // Q2 nodes per side
    index_t nq1 = 0;      // Q1 nodes per side
    index_t n_scalar = 0; // Q2 nodes (scalar velocity dofs)
    index_t n_p = 0;      // Q1 nodes
    std::vector<NodeClass> node_class;    // per Q2 node
    std::vector<index_t> inflow_nodes;    // ix=0, wall-to-wall order (incl corners)

    explicit ChannelMesh(int l) {
        if (l < 2 || l > 9) throw ConfigError("level must be in [2,9]");
        level = l;
        elements_per_side = index_t(1) << (l - 1);
        h = 2.0 / static_cast<double>(elements_per_side);
        nq2 = 2 * elements_per_side + 1;
        nq1 = elements_per_side + 1;
        n_scalar = nq2 * nq2;
        n_p = nq1 * nq1;
        node_class.assign(n_scalar, NodeClass::Interior);
        for (index_t iy = 0; iy < nq2; ++iy)
            for (index_t ix = 0; ix < nq2; ++ix) {
                index_t i = iy * nq2 + ix;
                if (iy == 0 || iy == nq2 - 1)
                    node_class[i] = NodeClass::Wall;  // corners are wall
                else if (ix == 0)
                    node_class[i] = NodeClass::Inflow;
                else if (ix == nq2 - 1)
                    node_class[i] = NodeClass::Outflow;
            }
        inflow_nodes.reserve(nq2);
        for (index_t iy = 0; iy < nq2; ++iy) inflow_nodes.push_back(iy * nq2);
    }

    double node_x(index_t i) const { return -1.0 + (h / 2.0) * static_cast<double>(i % nq2); }
    double node_y(index_t i) const { return -1.0 + (h / 2.0) * static_cast<double>(i / nq2); }

    bool is_wall(index_t i) const { return node_class[i] == NodeClass::Wall; }
    // geometric membership in the inflow/outflow lines x = -1 / x = 1 (corners included)
    bool on_inflow_line(index_t i) const { return i % nq2 == 0; }
    bool on_outflow_line(index_t i) const { return i % nq2 == nq2 - 1; }

    std::array<index_t, 9> q2_element_nodes(index_t ex, index_t ey) const {
        std::array<index_t, 9> n;
        for (index_t jy = 0; jy < 3; ++jy)
            for (index_t jx = 0; jx < 3; ++jx)
                n[jy * 3 + jx] = (2 * ey + jy) * nq2 + (2 * ex + jx);
        return n;
    }
    std::array<index_t, 4> q1_element_nodes(index_t ex, index_t ey) const {
        std::array<index_t, 4> n;
        for (index_t jy = 0; jy < 2; ++jy)
            for (index_t jx = 0; jx < 2; ++jx) n[jy * 2 + jx] = (ey + jy) * nq1 + (ex + jx);
        return n;
    }
};

// velocity dofs: [x-component scalar nodes | y-component scalar nodes]
struct DofMap {
    index_t n_v = 0;  // 2 * n_scalar
    index_t n_p = 0;
    index_t n_u = 0;  // 2 * inflow node count (incl corners)
    index_t n_scalar = 0;
    index_t nu_scalar = 0;
    std::vector<index_t> inflow_nodes;
    index_t total = 0;  // N = 2 n_v + 2 n_p + n_u

    explicit DofMap(const ChannelMesh& m) {
        n_scalar = m.n_scalar;
        n_v = 2 * m.n_scalar;
        n_p = m.n_p;
        nu_scalar = static_cast<index_t>(m.inflow_nodes.size());
        n_u = 2 * nu_scalar;
        inflow_nodes = m.inflow_nodes;
        total = 2 * n_v + 2 * n_p + n_u;
    }

    // velocity dof index of control dof l (component c of inflow node i)
    index_t control_to_velocity(index_t l) const {
        index_t c = l / nu_scalar, i = l % nu_scalar;
        return c * n_scalar + inflow_nodes[i];
    }
};

}  // namespace flowctrl
