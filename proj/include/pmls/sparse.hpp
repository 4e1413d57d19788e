#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmls/scheme.hpp"

namespace pmls {

/// Compressed sparse row matrix; the diagonal entry is stored first in each
/// row, which the relaxation sweeps rely on.
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    static CsrMatrix from_rows(const std::vector<LinearRow>& rows) {
        CsrMatrix a;
        a.n = static_cast<int>(rows.size());
        a.row_ptr.resize(a.n + 1, 0);
        std::size_t nnz = 0;
        for (const LinearRow& r : rows) nnz += 1 + r.off.size();
        a.col.reserve(nnz);
        a.val.reserve(nnz);
        for (int i = 0; i < a.n; ++i) {
            a.row_ptr[i] = static_cast<int>(a.col.size());
            a.col.push_back(i);
            a.val.push_back(rows[i].diag);
            for (const auto& [j, v] : rows[i].off) {
                a.col.push_back(j);
                a.val.push_back(v);
            }
        }
        a.row_ptr[a.n] = static_cast<int>(a.col.size());
        return a;
    }

    void matvec(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
            y[i] = s;
        }
    }

    double diagonal(int i) const { return val[row_ptr[i]]; }
};

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Relative residual of the solver contract: ||Ax - b||_inf / max(1, ||b||_inf).
inline double relative_residual(const CsrMatrix& a, const std::vector<double>& x,
                                const std::vector<double>& b) {
    std::vector<double> r(a.n);
    a.matvec(x, r);
    double rmax = 0.0;
    for (int i = 0; i < a.n; ++i) rmax = std::max(rmax, std::abs(r[i] - b[i]));
    return rmax / std::max(1.0, inf_norm(b));
}

struct LinearSolveStats {
    int iterations = 0;
    double residual = 0.0;  ///< final relative residual (contract norm)
    bool converged = false;
};

struct NoConvergence : std::runtime_error {
    NoConvergence(std::string msg, std::vector<double> best_, LinearSolveStats stats_)
        : std::runtime_error(std::move(msg)), best(std::move(best_)), stats(stats_) {}
    std::vector<double> best;
    LinearSolveStats stats;
};

/// Jacobi-preconditioned BiCGStab. Iterates until the contract residual
/// ||Ax-b||_inf / max(1, ||b||_inf) drops below `tol` (verified on the true
/// residual), restarting on breakdown.
inline LinearSolveStats bicgstab(const CsrMatrix& a, const std::vector<double>& b,
                                 std::vector<double>& x, double tol, int max_iter) {
    const int n = a.n;
    const double denom = std::max(1.0, inf_norm(b));
    std::vector<double> dinv(n);
    for (int i = 0; i < n; ++i) {
        const double d = a.diagonal(i);
        dinv[i] = d != 0.0 ? 1.0 / d : 1.0;
    }

    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), phat(n), s(n), shat(n), t(n), tmp(n);
    a.matvec(x, tmp);
    for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;

    LinearSolveStats stats;
    auto contract_ok = [&] {
        stats.residual = relative_residual(a, x, b);
        return stats.residual <= tol;
    };
    if (contract_ok()) {
        stats.converged = true;
        return stats;
    }

    for (int it = 1; it <= max_iter; ++it) {
        stats.iterations = it;
        double rho1 = 0.0;
        for (int i = 0; i < n; ++i) rho1 += rhat[i] * r[i];
        if (std::abs(rho1) < 1e-300) {  // breakdown: restart from the true residual
            a.matvec(x, tmp);
            for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        const double beta = (rho1 / rho) * (alpha / omega);
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        for (int i = 0; i < n; ++i) phat[i] = dinv[i] * p[i];
        a.matvec(phat, v);
        double rv = 0.0;
        for (int i = 0; i < n; ++i) rv += rhat[i] * v[i];
        if (std::abs(rv) < 1e-300) {
            rho = rho1;
            continue;
        }
        alpha = rho1 / rv;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (inf_norm(s) / denom <= 0.1 * tol) {
            for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
            if (contract_ok()) {
                stats.converged = true;
                return stats;
            }
            a.matvec(x, tmp);
            for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
            rho = rho1;
            continue;
        }
        for (int i = 0; i < n; ++i) shat[i] = dinv[i] * s[i];
        a.matvec(shat, t);
        double ts = 0.0, tt = 0.0;
        for (int i = 0; i < n; ++i) {
            ts += t[i] * s[i];
            tt += t[i] * t[i];
        }
        if (tt == 0.0) {
            for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
            if (contract_ok()) {
                stats.converged = true;
                return stats;
            }
            break;
        }
        omega = ts / tt;
        for (int i = 0; i < n; ++i) x[i] += alpha * phat[i] + omega * shat[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rho = rho1;
        if (inf_norm(r) / denom <= tol && contract_ok()) {
            stats.converged = true;
            return stats;
        }
    }
    stats.residual = relative_residual(a, x, b);
    stats.converged = stats.residual <= tol;
    return stats;
}

/// Plain Gauss-Seidel sweeps; robust fallback for the M-matrix systems.
inline LinearSolveStats gauss_seidel(const CsrMatrix& a, const std::vector<double>& b,
                                     std::vector<double>& x, double tol, int max_sweeps) {
    LinearSolveStats stats;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        stats.iterations = sweep;
        for (int i = 0; i < a.n; ++i) {
            double s = b[i];
            double d = a.val[a.row_ptr[i]];
            for (int k = a.row_ptr[i] + 1; k < a.row_ptr[i + 1]; ++k) s -= a.val[k] * x[a.col[k]];
            x[i] = s / d;
        }
        if (sweep % 4 == 0 || sweep == max_sweeps) {
            stats.residual = relative_residual(a, x, b);
            if (stats.residual <= tol) {
                stats.converged = true;
                return stats;
            }
        }
    }
    stats.residual = relative_residual(a, x, b);
    stats.converged = stats.residual <= tol;
    return stats;
}

/// Linear-solver contract entry point: BiCGStab with a Gauss-Seidel rescue
/// pass. Throws NoConvergence (carrying the best iterate) when the target
/// cannot be met within the budget.
inline LinearSolveStats solve_linear(const CsrMatrix& a, const std::vector<double>& b,
                                     std::vector<double>& x, double tol, int max_iter) {
    LinearSolveStats stats = bicgstab(a, b, x, tol, max_iter);
    if (!stats.converged) {
        LinearSolveStats gs = gauss_seidel(a, b, x, tol, max_iter);
        gs.iterations += stats.iterations;
        stats = gs;
    }
    if (!stats.converged)
        throw NoConvergence("solve_linear: no convergence after " + std::to_string(stats.iterations) +
                                " iterations (residual " + std::to_string(stats.residual) + ")",
                            x, stats);
    return stats;
}

}  // namespace pmls
