#pragma once

#include <array>
#include <cmath>

namespace pmls {

/// Solve an N x N system in place by Gaussian elimination with partial
/// pivoting. Returns false when a pivot falls below `rel_tol` times the
/// largest absolute entry of the original matrix (rank deficiency).
template <int N>
bool solve_dense(std::array<std::array<double, N>, N> a, std::array<double, N> b,
                 std::array<double, N>& x, double rel_tol = 1e-12) {
    double scale = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (scale == 0.0) return false;
    const double tol = rel_tol * scale;

    for (int col = 0; col < N; ++col) {
        int piv = col;
        for (int r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < tol) return false;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / a[col][col];
        for (int r = col + 1; r < N; ++r) {
            const double f = a[r][col] * inv;
            if (f == 0.0) continue;
            for (int j = col; j < N; ++j) a[r][j] -= f * a[col][j];
            b[r] -= f * b[col];
        }
    }
    for (int r = N - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < N; ++j) s -= a[r][j] * x[j];
        x[r] = s / a[r][r];
    }
    return true;
}

}  // namespace pmls
