#pragma once

#include <vector>

#include "pmls/mesh.hpp"
#include "pmls/reconstruction.hpp"
#include "pmls/velocity.hpp"

namespace pmls {

/// Per-triangle advective (mu) and regularized eikonal (nu) fluxes, stored
/// owner-oriented, with their sign classification frozen at construction
/// time (t^{n-1}). The classification is kept separately from the values so
/// it stays frozen even if values are inspected or perturbed afterwards.
/// For an internal triangle the neighbor sees the negated flux; a zero flux
/// belongs to the plus (outflow/explicit) set on both sides.
struct FluxSet {
    std::vector<double> mu;
    std::vector<double> nu;
    std::vector<signed char> mu_sign;  ///< sign of the owner-oriented mu: -1, 0, +1
    std::vector<signed char> nu_sign;
    double frozen_time = 0.0;

    double mu_at(int a, int p, const Mesh& mesh) const { return mesh.orientation(a, p) * mu[a]; }
    double nu_at(int a, int p, const Mesh& mesh) const { return mesh.orientation(a, p) * nu[a]; }

    bool mu_minus(int a, int p, const Mesh& mesh) const {
        return mesh.orientation(a, p) > 0 ? mu_sign[a] < 0 : mu_sign[a] > 0;
    }
    bool nu_minus(int a, int p, const Mesh& mesh) const {
        return mesh.orientation(a, p) > 0 ? nu_sign[a] < 0 : nu_sign[a] > 0;
    }

    /// Inflow-boundary flags B_p^{nu-} indexed by triangle, for the Soner
    /// filter of the representative gradient.
    std::vector<char> nu_inflow_boundary(const Mesh& mesh) const {
        std::vector<char> flags(mesh.triangles.size(), 0);
        for (std::size_t a = 0; a < mesh.triangles.size(); ++a)
            if (mesh.triangles[a].boundary() && nu_sign[a] < 0) flags[a] = 1;
        return flags;
    }
};

namespace detail {
inline signed char sign_of(double x) { return x < 0.0 ? -1 : (x > 0.0 ? +1 : 0); }
}

/// Midpoint-rule fluxes at t_prev from the previous-level triangle gradients:
///   mu_pa = v(x_a, t, grad_a) . n_pa |e_a|,   nu_pa = grad_a/|grad_a|_delta . n_pa |e_a|.
inline FluxSet compute_fluxes(const Mesh& mesh, const std::vector<Vec3>& triangle_gradients,
                              const VelocityField& velocity, double t_prev, const Delta& delta) {
    FluxSet fs;
    const std::size_t nt = mesh.triangles.size();
    fs.mu.resize(nt);
    fs.nu.resize(nt);
    fs.mu_sign.resize(nt);
    fs.nu_sign.resize(nt);
    fs.frozen_time = t_prev;
    for (std::size_t a = 0; a < nt; ++a) {
        const Triangle& tri = mesh.triangles[a];
        const Vec3& g = triangle_gradients[a];
        const Vec3 v = velocity.eval(tri.center, t_prev, g, delta);
        fs.mu[a] = dot(v, tri.normal) * tri.area;
        fs.nu[a] = dot(g, tri.normal) * tri.area / norm_reg(g, delta.value);
        fs.mu_sign[a] = detail::sign_of(fs.mu[a]);
        fs.nu_sign[a] = detail::sign_of(fs.nu[a]);
    }
    return fs;
}

/// Explicit per-cell partition of the triangle index sets by flux sign;
/// derived view over the frozen classification, mostly for tests and
/// diagnostics.
struct CellSignSets {
    std::vector<int> mu_minus_internal, mu_plus_internal;
    std::vector<int> mu_minus_boundary, mu_plus_boundary;
    std::vector<int> nu_minus_internal, nu_plus_internal;
    std::vector<int> nu_minus_boundary, nu_plus_boundary;
};

inline CellSignSets classify_signs(const Mesh& mesh, const FluxSet& fs, int p) {
    CellSignSets s;
    for (int a : mesh.cells[p].internal_triangles) {
        (fs.mu_minus(a, p, mesh) ? s.mu_minus_internal : s.mu_plus_internal).push_back(a);
        (fs.nu_minus(a, p, mesh) ? s.nu_minus_internal : s.nu_plus_internal).push_back(a);
    }
    for (int a : mesh.cells[p].boundary_triangles) {
        (fs.mu_minus(a, p, mesh) ? s.mu_minus_boundary : s.mu_plus_boundary).push_back(a);
        (fs.nu_minus(a, p, mesh) ? s.nu_minus_boundary : s.nu_plus_boundary).push_back(a);
    }
    return s;
}

}  // namespace pmls
