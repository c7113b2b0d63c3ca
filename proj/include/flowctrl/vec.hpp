// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace flowctrl {

using Vec = std::vector<double>;
using index_t = std::ptrdiff_t;

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// y += c*x
inline void axpy(double c, const Vec& x, Vec& y) {
    if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline void scale(Vec& x, double c) {
    for (double& v : x) v *= c;
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

}  // namespace flowctrl
