#pragma once

#include <utility>
#include <vector>

#include "pmls/field.hpp"
#include "pmls/flux.hpp"
#include "pmls/mesh.hpp"

namespace pmls {

/// Boundary-condition strategy for the cells adjacent to the domain boundary.
enum class BcKind { Eikonal, Dirichlet, ZeroNeumann, LinearExtension };

/// One assembled equation: diagonal, 1-ring off-diagonals, right-hand side.
struct LinearRow {
    double diag = 0.0;
    std::vector<std::pair<int, double>> off;
    double rhs = 0.0;
};

/// Frozen per-step assembly inputs. Everything here is a function of
/// t^{n-1} data (plus the Dirichlet values at t^n); only the iterate
/// arguments of the row functions change across deferred-correction passes.
struct AssemblyInput {
    const Mesh& mesh;
    BcKind bc;
    const FluxSet& fluxes;                  ///< frozen at t^{n-1}
    const std::vector<Vec3>& repr_prev;     ///< representative gradients of u^{n-1}
    const CellField& u_prev;                ///< u^{n-1}
    double dt;
    const std::vector<double>* dirichlet_values = nullptr;  ///< u_D(x_b, t^n) per boundary triangle
};

/// Transport row (IIOE): inflow triangles enter the matrix with the lagged
/// gradient correction on the right-hand side, outflow triangles are fully
/// explicit at t^{n-1}. Boundary triangles follow the active boundary
/// condition. Valid for internal cells under every mode and for boundary
/// cells under Dirichlet/ZNBC/LEBC.
inline LinearRow assemble_transport_row(const AssemblyInput& in, int p,
                                        const std::vector<Vec3>& repr_iter,
                                        const CellField& u_iter) {
    const Mesh& mesh = in.mesh;
    const Cell& cell = mesh.cells[p];
    LinearRow row;
    const double mass = cell.volume / in.dt;
    row.diag = mass;
    row.rhs = mass * in.u_prev.values[p];

    for (int a : cell.internal_triangles) {
        const double mu = in.fluxes.mu_at(a, p, mesh);
        const Triangle& tri = mesh.triangles[a];
        if (in.fluxes.mu_minus(a, p, mesh)) {
            const int q = mesh.other_cell(a, p);
            row.diag -= mu;
            row.off.emplace_back(q, mu);
            row.rhs -= mu * dot(repr_iter[q], tri.center - mesh.cells[q].center);
        } else {
            row.rhs -= mu * dot(in.repr_prev[p], tri.center - cell.center);
        }
    }
    for (int b : cell.boundary_triangles) {
        const double mu = in.fluxes.mu_at(b, p, mesh);
        const Triangle& tri = mesh.triangles[b];
        if (!in.fluxes.mu_minus(b, p, mesh)) {
            row.rhs -= mu * dot(in.repr_prev[p], tri.center - cell.center);
            continue;
        }
        switch (in.bc) {
            case BcKind::Dirichlet:
                row.diag -= mu;
                row.rhs -= mu * (*in.dirichlet_values)[b];
                break;
            case BcKind::ZeroNeumann:
                // u_b = u_p^{n,k}: the inflow term cancels identically.
                break;
            case BcKind::LinearExtension:
                row.diag -= mu;
                row.rhs -= mu * (u_iter.values[p] + dot(repr_iter[p], tri.center - cell.center));
                break;
            case BcKind::Eikonal:
                throw std::logic_error("assemble_transport_row: eikonal boundary cell");
        }
    }
    return row;
}

/// Semi-implicit linearized eikonal row for a boundary cell: internal inflow
/// triangles are implicit, internal and boundary outflow triangles explicit
/// in the lagged iterate, and inflow boundary triangles contribute nothing
/// (Soner admissibility). The right-hand side carries the cell volume.
/// A cell without internal inflow (empty F^{nu-}) degenerates to the
/// identity update u_p = u_p^{n,k-1}; `degenerate` is set for diagnostics.
inline LinearRow assemble_eikonal_row(const AssemblyInput& in, int p,
                                      const std::vector<Vec3>& repr_iter, const CellField& u_iter,
                                      bool* degenerate = nullptr) {
    const Mesh& mesh = in.mesh;
    const Cell& cell = mesh.cells[p];
    LinearRow row;
    row.rhs = cell.volume;
    bool has_inflow = false;

    for (int a : cell.internal_triangles) {
        const double nu = in.fluxes.nu_at(a, p, mesh);
        const Triangle& tri = mesh.triangles[a];
        if (in.fluxes.nu_minus(a, p, mesh)) {
            const int q = mesh.other_cell(a, p);
            has_inflow = true;
            row.diag -= nu;
            row.off.emplace_back(q, nu);
            row.rhs -= nu * dot(repr_iter[q], tri.center - mesh.cells[q].center);
        } else {
            row.rhs -= nu * dot(repr_iter[p], tri.center - cell.center);
        }
    }
    for (int b : cell.boundary_triangles) {
        if (in.fluxes.nu_minus(b, p, mesh)) continue;  // Soner: no inflow-boundary terms
        const double nu = in.fluxes.nu_at(b, p, mesh);
        row.rhs -= nu * dot(repr_iter[p], mesh.triangles[b].center - cell.center);
    }

    if (degenerate) *degenerate = !has_inflow;
    if (!has_inflow) {
        row = LinearRow{};
        row.diag = 1.0;
        row.rhs = u_iter.values[p];
    }
    return row;
}

struct AssembledRows {
    std::vector<LinearRow> rows;
    int degenerate_eikonal_rows = 0;
};

/// Assemble every cell row for the given iterate. The matrix part is a
/// function of the frozen inputs only; re-running with identical inputs is
/// bit-identical.
inline AssembledRows assemble_rows(const AssemblyInput& in, const std::vector<Vec3>& repr_iter,
                                   const CellField& u_iter) {
    if (in.bc == BcKind::Dirichlet && !in.dirichlet_values)
        throw std::invalid_argument("assemble_rows: Dirichlet mode needs boundary values");
    AssembledRows out;
    out.rows.resize(in.mesh.cells.size());
    for (int p = 0; p < in.mesh.n_cells(); ++p) {
        if (in.bc == BcKind::Eikonal && in.mesh.cells[p].boundary()) {
            bool degenerate = false;
            out.rows[p] = assemble_eikonal_row(in, p, repr_iter, u_iter, &degenerate);
            if (degenerate) ++out.degenerate_eikonal_rows;
        } else {
            out.rows[p] = assemble_transport_row(in, p, repr_iter, u_iter);
        }
    }
    return out;
}

}  // namespace pmls
