#pragma once

// Minimal dense matrix helpers (row-major) for the small systems this library
// needs: LU solve and determinant up to a few dozen dimensions.

#include <cmath>
#include <vector>

#include "cournot/common.hpp"

namespace cournot {

struct Matrix {
    std::size_t n = 0;
    std::vector<double> a;  // n x n row-major

    Matrix() = default;
    explicit Matrix(std::size_t dim) : n(dim), a(dim * dim, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

namespace detail {

// In-place LU with partial pivoting; returns pivot sign, fills perm.
inline double lu_decompose(Matrix& m, std::vector<std::size_t>& perm) {
    const std::size_t n = m.n;
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    double sign = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::fabs(m(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best == 0.0) throw numeric_error("lu_decompose: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m.a[k * n + j], m.a[piv * n + j]);
            std::swap(perm[k], perm[piv]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            m(i, k) /= m(k, k);
            double lik = m(i, k);
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= lik * m(k, j);
        }
    }
    return sign;
}

}  // namespace detail

inline double determinant(Matrix m) {
    std::vector<std::size_t> perm;
    double det = detail::lu_decompose(m, perm);
    for (std::size_t i = 0; i < m.n; ++i) det *= m(i, i);
    return det;
}

inline std::vector<double> solve(Matrix m, std::vector<double> rhs) {
    require(rhs.size() == m.n, "solve: dimension mismatch");
    std::vector<std::size_t> perm;
    detail::lu_decompose(m, perm);
    const std::size_t n = m.n;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm[i]];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= m(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= m(i, j) * x[j];
        x[i] /= m(i, i);
    }
    return x;
}

}  // namespace cournot
