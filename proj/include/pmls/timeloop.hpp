#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "pmls/scenarios.hpp"
#include "pmls/scheme.hpp"
#include "pmls/sparse.hpp"

namespace pmls {

struct BoundaryMode {
    BcKind kind = BcKind::Eikonal;
    BoundaryEvaluator dirichlet;  ///< required for BcKind::Dirichlet

    static BoundaryMode eikonal() { return {BcKind::Eikonal, {}}; }
    static BoundaryMode zero_neumann() { return {BcKind::ZeroNeumann, {}}; }
    static BoundaryMode linear_extension() { return {BcKind::LinearExtension, {}}; }
    static BoundaryMode dirichlet_bc(BoundaryEvaluator eval) {
        return {BcKind::Dirichlet, std::move(eval)};
    }
};

/// Everything the deferred-correction driver exposes to an observer right
/// after assembling one linear system (before solving it).
struct StepContext {
    int step;     ///< time step n (1-based)
    int iterate;  ///< deferred-correction iterate k (1-based)
    double t_prev;
    double t_next;
    const AssemblyInput& input;
    const std::vector<Vec3>& repr_iter;
    const CellField& u_iter;
    const CsrMatrix& matrix;
    const std::vector<double>& rhs;
};
using SystemObserver = std::function<void(const StepContext&)>;

struct TimeLoopConfig {
    double dt = 0.1;
    double T = 0.5;
    BoundaryMode bc;
    VelocityField velocity;
    double eta = 1e-12;        ///< deferred-correction stopping bound
    int k_max = 50;            ///< outer iteration guard
    double linear_tol = 1e-13; ///< inner solver contract (strictly tighter than eta)
    int linear_max_iter = 20000;
    Delta delta{1e-12};
    int snapshot_stride = 0;   ///< VTK output every this many steps (0 = final only)
    SystemObserver observer;
};

struct SolveReport {
    int K = 0;                              ///< outer iterations used
    std::vector<double> residual_history;   ///< mean |A u^{n,k} - f(u^{n,k})| per iterate
    std::vector<int> linear_iterations;
    bool converged = false;
    int degenerate_rows = 0;
};

struct Trajectory {
    std::vector<CellField> states;  ///< u^0 .. u^N
    std::vector<SolveReport> reports;
};

namespace detail {

inline StencilKind stencil_for(BcKind bc) {
    return bc == BcKind::Dirichlet ? StencilKind::DirichletAugmented : StencilKind::LocalOnly;
}

/// Iterate-level cache at time `t`: S1..S3, triangle fits, representative
/// gradients (Soner-filtered against the frozen inflow-boundary set in
/// eikonal mode).
inline ReconstructionCache iterate_cache(const Mesh& mesh, const CellField& u, BcKind bc,
                                         const BoundaryEvaluator& dirichlet,
                                         const std::vector<char>* soner_excluded) {
    std::vector<double> bvals;
    const std::vector<double>* bvals_ptr = nullptr;
    if (bc == BcKind::Dirichlet) {
        bvals = boundary_triangle_values(mesh, dirichlet, u.time);
        bvals_ptr = &bvals;
    }
    ReconstructionCache cache = reconstruct_stages(mesh, u, stencil_for(bc), bvals_ptr);
    if (bc == BcKind::Eikonal)
        fill_representative_gradients(cache, mesh, RepresentativeMode::SonerFiltered, soner_excluded);
    else
        fill_representative_gradients(cache, mesh, RepresentativeMode::AllFaces);
    return cache;
}

}  // namespace detail

/// One time step t^{n-1} -> t^n: freeze the fluxes and sign sets at the old
/// level, then iterate the deferred correction
///   A^{n-1} u^{n,k} = f(u^{n,k-1})
/// until the fixed-point defect mean_p |(A u^{n,k} - f(u^{n,k}))_p| falls
/// below eta. Returns u^{n,K} and the iteration report; if k_max is hit the
/// best iterate is returned with converged=false.
inline std::pair<CellField, SolveReport> deferred_correction_step(const Mesh& mesh,
                                                                  const CellField& u_prev,
                                                                  const TimeLoopConfig& config,
                                                                  int step_index = 1) {
    const double t_prev = u_prev.time;
    const double t_next = t_prev + config.dt;
    const BcKind bc = config.bc.kind;

    // Frozen data at t^{n-1}.
    std::vector<double> bvals_prev;
    const std::vector<double>* bvals_prev_ptr = nullptr;
    if (bc == BcKind::Dirichlet) {
        bvals_prev = boundary_triangle_values(mesh, config.bc.dirichlet, t_prev);
        bvals_prev_ptr = &bvals_prev;
    }
    ReconstructionCache frozen = reconstruct_stages(mesh, u_prev, detail::stencil_for(bc), bvals_prev_ptr);
    const FluxSet fluxes =
        compute_fluxes(mesh, frozen.triangle_gradients, config.velocity, t_prev, config.delta);
    std::vector<char> soner_excluded;
    const std::vector<char>* excluded_ptr = nullptr;
    if (bc == BcKind::Eikonal) {
        soner_excluded = fluxes.nu_inflow_boundary(mesh);
        excluded_ptr = &soner_excluded;
        fill_representative_gradients(frozen, mesh, RepresentativeMode::SonerFiltered, excluded_ptr);
    } else {
        fill_representative_gradients(frozen, mesh, RepresentativeMode::AllFaces);
    }

    std::vector<double> dirichlet_next;
    AssemblyInput input{mesh, bc, fluxes, frozen.representative_gradients, u_prev, config.dt, nullptr};
    if (bc == BcKind::Dirichlet) {
        dirichlet_next = boundary_triangle_values(mesh, config.bc.dirichlet, t_next);
        input.dirichlet_values = &dirichlet_next;
    }

    // Iterate state: u^{n,0} = u^{n-1}, with the frozen gradients as the
    // lagged iterate-0 gradients.
    CellField u_iter = u_prev;
    u_iter.time = t_next;
    ReconstructionCache cache_iter = frozen;

    SolveReport report;
    AssembledRows rows = assemble_rows(input, cache_iter.representative_gradients, u_iter);
    report.degenerate_rows = rows.degenerate_eikonal_rows;

    CellField best = u_iter;
    double best_residual = std::numeric_limits<double>::max();

    for (int k = 1; k <= config.k_max; ++k) {
        const CsrMatrix a = CsrMatrix::from_rows(rows.rows);
        std::vector<double> b(mesh.n_cells());
        for (int p = 0; p < mesh.n_cells(); ++p) b[p] = rows.rows[p].rhs;

        if (config.observer) {
            StepContext ctx{step_index, k,      t_prev, t_next, input,
                            cache_iter.representative_gradients, u_iter, a, b};
            config.observer(ctx);
        }

        std::vector<double> x = u_iter.values;
        LinearSolveStats stats = solve_linear(a, b, x, config.linear_tol, config.linear_max_iter);
        report.linear_iterations.push_back(stats.iterations);

        u_iter.values = std::move(x);
        cache_iter = detail::iterate_cache(mesh, u_iter, bc, config.bc.dirichlet, excluded_ptr);
        rows = assemble_rows(input, cache_iter.representative_gradients, u_iter);

        // Fixed-point defect with f evaluated at the new iterate.
        std::vector<double> au(mesh.n_cells());
        a.matvec(u_iter.values, au);
        double defect = 0.0;
        for (int p = 0; p < mesh.n_cells(); ++p) defect += std::abs(au[p] - rows.rows[p].rhs);
        defect /= mesh.n_cells();
        report.residual_history.push_back(defect);
        report.K = k;

        if (defect < best_residual) {
            best_residual = defect;
            best = u_iter;
        }
        if (defect < config.eta) {
            report.converged = true;
            return {u_iter, report};
        }
    }
    return {best, report};  // k_max exceeded: best iterate, flagged via converged=false
}

/// Algorithm driver: advance n = 1..ceil(T/dt), recomputing the frozen data
/// every step, and keep every state for the error metrics.
inline Trajectory time_loop(const Mesh& mesh, const CellField& u0, const TimeLoopConfig& config) {
    if (config.dt <= 0.0 || config.T < config.dt)
        throw std::invalid_argument("time_loop: need dt > 0 and T >= dt");
    const int steps = static_cast<int>(std::ceil(config.T / config.dt - 1e-9));
    Trajectory traj;
    traj.states.reserve(steps + 1);
    traj.states.push_back(u0);
    for (int n = 1; n <= steps; ++n) {
        try {
            auto [u, report] = deferred_correction_step(mesh, traj.states.back(), config, n);
            traj.reports.push_back(std::move(report));
            traj.states.push_back(std::move(u));
        } catch (const std::exception& e) {
            throw std::runtime_error("time_loop: step " + std::to_string(n) + ": " + e.what());
        }
    }
    return traj;
}

}  // namespace pmls
