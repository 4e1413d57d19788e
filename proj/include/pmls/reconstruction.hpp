#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pmls/field.hpp"
#include "pmls/mesh.hpp"
#include "pmls/small_linalg.hpp"

namespace pmls {

/// Any stencil point closer than this to the expansion center is an exact
/// hit: the inverse-distance weight diverges and the fit degenerates to
/// interpolation of that sample.
inline constexpr double kWeightEps = 1e-14;

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateStencil : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point set for the least-squares cell gradient: neighbor cell centers
/// only (L_p), or augmented with boundary triangle centers carrying
/// prescribed values (D_p). Both coincide on internal cells.
enum class StencilKind { DirichletAugmented, LocalOnly };

/// Weighted least-squares gradient at the cell center, weights 1/|x - x_p|.
/// Exact for affine fields when the stencil spans all three directions.
/// `boundary_tri_values` is indexed by triangle id and is required for the
/// DirichletAugmented stencil on boundary cells.
inline Vec3 ls_cell_gradient(const Mesh& mesh, const CellField& field, int p, StencilKind stencil,
                             const std::vector<double>* boundary_tri_values = nullptr) {
    const Cell& cell = mesh.cells[p];
    const double up = field.values[p];

    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> r{};
    auto add = [&](const Vec3& x, double u) {
        const Vec3 d = x - cell.center;
        const double dist2 = norm2(d);
        if (dist2 < kWeightEps * kWeightEps) return;  // no directional information
        const double w2 = 1.0 / dist2;
        m[0][0] += w2 * d.x * d.x;
        m[0][1] += w2 * d.x * d.y;
        m[0][2] += w2 * d.x * d.z;
        m[1][1] += w2 * d.y * d.y;
        m[1][2] += w2 * d.y * d.z;
        m[2][2] += w2 * d.z * d.z;
        const double du = w2 * (u - up);
        r[0] += d.x * du;
        r[1] += d.y * du;
        r[2] += d.z * du;
    };

    for (int q : cell.neighbors) add(mesh.cells[q].center, field.values[q]);
    if (stencil == StencilKind::DirichletAugmented && !cell.boundary_triangles.empty()) {
        if (!boundary_tri_values)
            throw std::invalid_argument("ls_cell_gradient: Dirichlet stencil needs boundary values");
        for (int a : cell.boundary_triangles)
            add(mesh.triangles[a].center, (*boundary_tri_values)[a]);
    }
    m[1][0] = m[0][1];
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];

    std::array<double, 3> y{};
    if (!solve_dense<3>(m, r, y))
        throw RankDeficient("ls_cell_gradient: singular normal matrix at cell " + std::to_string(p));
    return {y[0], y[1], y[2]};
}

/// Inverse-distance weighted average of the linear extrapolations
/// u_p + grad_p . (x_v - x_p) over the cells incident to vertex v.
inline double vertex_value(const Mesh& mesh, const CellField& field,
                           const std::vector<Vec3>& cell_gradients, int v) {
    const Vec3& xv = mesh.vertices[v];
    double num = 0.0, den = 0.0;
    for (int p : mesh.vertex_cells[v]) {
        const Vec3 d = xv - mesh.cells[p].center;
        const double dist = norm(d);
        const double ext = field.values[p] + dot(cell_gradients[p], d);
        if (dist < kWeightEps) return ext;  // exact hit
        const double w = 1.0 / dist;
        num += w * ext;
        den += w;
    }
    return num / den;
}

/// Diamond-cell face value: weighted affine fit over the face vertices and
/// the apex cell center(s); returns the fitted value at the face center.
/// Falls back to the inverse-distance average when the 4x4 system is rank
/// deficient.
inline double face_value(const Mesh& mesh, const CellField& field,
                         const std::vector<double>& vertex_values, int g) {
    const Face& face = mesh.faces[g];
    const Vec3& xg = face.center;

    std::array<std::array<double, 4>, 4> m{};
    std::array<double, 4> r{};
    double idw_num = 0.0, idw_den = 0.0;
    std::optional<double> hit;
    auto add = [&](const Vec3& x, double u) {
        const Vec3 d = x - xg;
        const double dist = norm(d);
        if (dist < kWeightEps) {
            if (!hit) hit = u;
            return;
        }
        const double w2 = 1.0 / (dist * dist);
        const double phi[4] = {1.0, d.x, d.y, d.z};
        for (int i = 0; i < 4; ++i) {
            for (int j = i; j < 4; ++j) m[i][j] += w2 * phi[i] * phi[j];
            r[i] += w2 * phi[i] * u;
        }
        idw_num += u / dist;
        idw_den += 1.0 / dist;
    };

    for (int v : face.vertices) add(mesh.vertices[v], vertex_values[v]);
    add(mesh.cells[face.owner].center, field.values[face.owner]);
    if (!face.boundary()) add(mesh.cells[face.neighbor].center, field.values[face.neighbor]);

    if (hit) return *hit;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) m[i][j] = m[j][i];

    std::array<double, 4> y{};
    if (!solve_dense<4>(m, r, y)) return idw_num / idw_den;
    return y[0];
}

struct TriangleFit {
    double alpha = 0.0;    ///< fitted value at the triangle center (kept, unused downstream)
    Vec3 gradient{};       ///< beta, |beta| <= 1
    bool saturated = false;  ///< constrained solution on the sphere |beta| = 1
};

namespace detail {

/// Solve (A + lambda I) beta = b with |beta| = 1, lambda >= 0, by bisection
/// on |beta(lambda)|^2 - 1. Assumes the unconstrained solution lies outside
/// the unit ball, which makes the profile strictly decreasing.
inline bool sphere_constrained(const std::array<std::array<double, 3>, 3>& a,
                               const std::array<double, 3>& b, Vec3& beta) {
    auto solve_shifted = [&](double lambda, std::array<double, 3>& y) {
        auto m = a;
        m[0][0] += lambda;
        m[1][1] += lambda;
        m[2][2] += lambda;
        return solve_dense<3>(m, b, y, 1e-14);
    };
    const double bn = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    if (bn == 0.0) return false;
    double lo = 0.0, hi = bn;  // |beta(hi)| <= |b|/hi = 1
    std::array<double, 3> y{};
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!solve_shifted(mid, y)) {
            lo = mid;  // shift upward past the singular point
            continue;
        }
        const double n2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        if (std::abs(n2 - 1.0) < 1e-14) break;
        (n2 > 1.0 ? lo : hi) = mid;
    }
    beta = {y[0], y[1], y[2]};
    const double n = norm(beta);
    if (n == 0.0) return false;
    if (n > 1.0) beta /= n;
    return true;
}

}  // namespace detail

/// Representative gradient at the triangle center: weighted affine fit over
/// Q_a = {x_v0, x_v1, x_g, x_p [, x_q]} subject to |beta| <= 1. When the
/// unconstrained minimizer is feasible it is returned unchanged; otherwise
/// the minimizer on the sphere |beta| = 1 is computed by a Lagrange shift.
/// Rank-deficient fits fall back to the owner cell gradient clamped to the
/// unit ball.
inline TriangleFit triangle_gradient(const Mesh& mesh, int a, const CellField& field,
                                     const std::vector<double>& vertex_values,
                                     const std::vector<double>& face_values,
                                     const std::vector<Vec3>& cell_gradients) {
    const Triangle& tri = mesh.triangles[a];
    const Vec3& xa = tri.center;

    // Weighted normal equations for basis (1, d) about x_a, partitioned as
    //   [ s   c^T ] [alpha]   [ r0 ]
    //   [ c   M   ] [beta ] = [ r  ].
    double s = 0.0, r0 = 0.0;
    std::array<double, 3> c{}, r{};
    std::array<std::array<double, 3>, 3> m{};
    std::optional<double> hit;
    auto add = [&](const Vec3& x, double u) {
        const Vec3 d = x - xa;
        const double dist2 = norm2(d);
        if (dist2 < kWeightEps * kWeightEps) {
            if (!hit) hit = u;
            return;
        }
        const double w2 = 1.0 / dist2;
        s += w2;
        r0 += w2 * u;
        c[0] += w2 * d.x;
        c[1] += w2 * d.y;
        c[2] += w2 * d.z;
        m[0][0] += w2 * d.x * d.x;
        m[0][1] += w2 * d.x * d.y;
        m[0][2] += w2 * d.x * d.z;
        m[1][1] += w2 * d.y * d.y;
        m[1][2] += w2 * d.y * d.z;
        m[2][2] += w2 * d.z * d.z;
        const double wu = w2 * u;
        r[0] += d.x * wu;
        r[1] += d.y * wu;
        r[2] += d.z * wu;
    };

    add(mesh.vertices[tri.v0], vertex_values[tri.v0]);
    add(mesh.vertices[tri.v1], vertex_values[tri.v1]);
    add(mesh.faces[tri.face].center, face_values[tri.face]);
    add(mesh.cells[tri.owner].center, field.values[tri.owner]);
    if (!tri.boundary()) add(mesh.cells[tri.neighbor].center, field.values[tri.neighbor]);
    m[1][0] = m[0][1];
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];

    auto fallback = [&] {
        TriangleFit f;
        f.gradient = cell_gradients[tri.owner];
        const double n = norm(f.gradient);
        if (n > 1.0) f.gradient /= n;
        f.alpha = hit ? *hit : (s > 0.0 ? r0 / s : 0.0);
        f.saturated = false;
        return f;
    };

    // Eliminate alpha: (M - c c^T / s) beta = r - (r0 / s) c.
    if (s <= 0.0) return fallback();
    auto ared = m;
    std::array<double, 3> bred = r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) ared[i][j] -= c[i] * c[j] / s;
        bred[i] -= (r0 / s) * c[i];
    }
    // Pinned alpha (exact hit at the center) keeps the full M instead.
    if (hit) {
        ared = m;
        for (int i = 0; i < 3; ++i) bred[i] = r[i] - *hit * c[i];
    }

    TriangleFit fit;
    std::array<double, 3> y{};
    if (solve_dense<3>(ared, bred, y)) {
        fit.gradient = {y[0], y[1], y[2]};
        if (norm2(fit.gradient) <= 1.0 + 1e-14) {
            fit.alpha = hit ? *hit : (r0 - dot({c[0], c[1], c[2]}, fit.gradient)) / s;
            return fit;
        }
    } else {
        return fallback();
    }

    if (!detail::sphere_constrained(ared, bred, fit.gradient)) return fallback();
    fit.saturated = true;
    fit.alpha = hit ? *hit : (r0 - dot({c[0], c[1], c[2]}, fit.gradient)) / s;
    return fit;
}

/// Which boundary triangles enter the representative cell gradient.
enum class RepresentativeMode { AllFaces, SonerFiltered };

/// Inverse-distance average of triangle gradients over F_p u B_p, or over
/// F_p u B_p^{nu+} when `excluded` marks the inflow boundary triangles.
/// Throws DegenerateStencil when every triangle of the cell is excluded.
inline Vec3 representative_cell_gradient(const Mesh& mesh,
                                         const std::vector<Vec3>& triangle_gradients, int p,
                                         RepresentativeMode mode,
                                         const std::vector<char>* excluded = nullptr) {
    const Cell& cell = mesh.cells[p];
    Vec3 num{};
    double den = 0.0;
    auto add = [&](int a) {
        const double w = 1.0 / norm(mesh.triangles[a].center - cell.center);
        num += w * triangle_gradients[a];
        den += w;
    };
    for (int a : cell.internal_triangles) add(a);
    if (mode == RepresentativeMode::AllFaces) {
        for (int a : cell.boundary_triangles) add(a);
    } else {
        if (!excluded)
            throw std::invalid_argument("representative_cell_gradient: Soner mode needs nu signs");
        for (int a : cell.boundary_triangles)
            if (!(*excluded)[a]) add(a);
    }
    if (den == 0.0)
        throw DegenerateStencil("representative_cell_gradient: empty set at cell " +
                                std::to_string(p));
    return num / den;
}

/// Per-step derived data, built in dependency order S1 -> S2 -> S3 ->
/// triangle fits -> representative gradients.
struct ReconstructionCache {
    std::vector<Vec3> cell_gradients;
    std::vector<double> vertex_values;
    std::vector<double> face_values;
    std::vector<Vec3> triangle_gradients;
    std::vector<double> triangle_alphas;
    std::vector<Vec3> representative_gradients;
};

/// Boundary values at boundary triangle centers for the Dirichlet stencil;
/// entries of non-boundary triangles are unused.
inline std::vector<double> boundary_triangle_values(const Mesh& mesh, const BoundaryEvaluator& eval,
                                                    double t) {
    std::vector<double> vals(mesh.triangles.size(), 0.0);
    for (std::size_t a = 0; a < mesh.triangles.size(); ++a)
        if (mesh.triangles[a].boundary()) vals[a] = eval(mesh.triangles[a].center, t);
    return vals;
}

/// Stages S1-S3 plus the triangle fits. Representative gradients are filled
/// separately (they may depend on the nu-flux signs in the Soner mode).
inline ReconstructionCache reconstruct_stages(const Mesh& mesh, const CellField& field,
                                              StencilKind stencil,
                                              const std::vector<double>* boundary_tri_values = nullptr) {
    ReconstructionCache cache;
    const int nc = mesh.n_cells();
    cache.cell_gradients.resize(nc);
    for (int p = 0; p < nc; ++p) {
        try {
            cache.cell_gradients[p] = ls_cell_gradient(mesh, field, p, stencil, boundary_tri_values);
        } catch (const RankDeficient&) {
            cache.cell_gradients[p] = Vec3{};  // constant extrapolation for this cell
        }
    }
    cache.vertex_values.resize(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        cache.vertex_values[v] = vertex_value(mesh, field, cache.cell_gradients, static_cast<int>(v));
    cache.face_values.resize(mesh.faces.size());
    for (std::size_t g = 0; g < mesh.faces.size(); ++g)
        cache.face_values[g] = face_value(mesh, field, cache.vertex_values, static_cast<int>(g));
    cache.triangle_gradients.resize(mesh.triangles.size());
    cache.triangle_alphas.resize(mesh.triangles.size());
    for (std::size_t a = 0; a < mesh.triangles.size(); ++a) {
        TriangleFit fit = triangle_gradient(mesh, static_cast<int>(a), field, cache.vertex_values,
                                            cache.face_values, cache.cell_gradients);
        cache.triangle_gradients[a] = fit.gradient;
        cache.triangle_alphas[a] = fit.alpha;
    }
    return cache;
}

inline void fill_representative_gradients(ReconstructionCache& cache, const Mesh& mesh,
                                          RepresentativeMode mode,
                                          const std::vector<char>* excluded = nullptr) {
    const int nc = mesh.n_cells();
    cache.representative_gradients.resize(nc);
    for (int p = 0; p < nc; ++p)
        cache.representative_gradients[p] =
            representative_cell_gradient(mesh, cache.triangle_gradients, p, mode, excluded);
}

/// Full cache in one call (AllFaces representative mode).
inline ReconstructionCache build_cache(const Mesh& mesh, const CellField& field, StencilKind stencil,
                                       const std::vector<double>* boundary_tri_values = nullptr) {
    ReconstructionCache cache = reconstruct_stages(mesh, field, stencil, boundary_tri_values);
    fill_representative_gradients(cache, mesh, RepresentativeMode::AllFaces);
    return cache;
}

}  // namespace pmls
