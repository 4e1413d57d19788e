#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pmls/mesh.hpp"
#include "pmls/reconstruction.hpp"

namespace pmls {

namespace detail {

/// Fraction of a tetrahedron's volume where the linear interpolant of the
/// vertex values is <= 0. Vertices at exactly 0 count as inside. Evaluated
/// by the closed-form corner expansion
///   sum_{v: u_v < 0} (-u_v)^3 / prod_{w != v} (u_w - u_v),
/// with tied values separated by a relative nudge.
inline double tet_negative_fraction(std::array<double, 4> u) {
    double lo = u[0], hi = u[0];
    for (double x : u) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi <= 0.0) return 1.0;
    if (lo >= 0.0) return 0.0;

    std::sort(u.begin(), u.end());
    const double scale = std::max(std::abs(lo), std::abs(hi));
    const double sep = 1e-11 * scale;
    for (int i = 1; i < 4; ++i)
        if (u[i] - u[i - 1] < sep) u[i] = u[i - 1] + sep;

    double frac = 0.0;
    for (int v = 0; v < 4 && u[v] < 0.0; ++v) {
        double denom = 1.0;
        for (int w = 0; w < 4; ++w)
            if (w != v) denom *= u[w] - u[v];
        frac += (-u[v]) * (-u[v]) * (-u[v]) / denom;
    }
    return std::clamp(frac, 0.0, 1.0);
}

inline Vec3 edge_crossing(const Vec3& a, const Vec3& b, double ua, double ub) {
    const double t = ua / (ua - ub);
    return a + t * (b - a);
}

}  // namespace detail

/// Marching-tetrahedra triangles of {u = 0} within one tet, appended to
/// `out`, oriented with the normal pointing toward positive u.
inline void marching_tet(const std::array<Vec3, 4>& x, const std::array<double, 4>& u,
                         std::vector<std::array<Vec3, 3>>& out) {
    int inside[4], outside[4];
    int ni = 0, no = 0;
    for (int i = 0; i < 4; ++i)
        (u[i] <= 0.0 ? inside[ni++] : outside[no++]) = i;
    if (ni == 0 || ni == 4) return;

    auto cross_pt = [&](int a, int b) { return detail::edge_crossing(x[a], x[b], u[a], u[b]); };
    auto emit = [&](Vec3 p0, Vec3 p1, Vec3 p2) {
        // orient toward the positive side
        Vec3 cin{}, cout{};
        for (int i = 0; i < ni; ++i) cin += x[inside[i]];
        for (int i = 0; i < no; ++i) cout += x[outside[i]];
        cin /= ni;
        cout /= no;
        if (dot(cross(p1 - p0, p2 - p0), cout - cin) < 0.0) std::swap(p1, p2);
        out.push_back({p0, p1, p2});
    };

    if (ni == 1) {
        emit(cross_pt(inside[0], outside[0]), cross_pt(inside[0], outside[1]),
             cross_pt(inside[0], outside[2]));
    } else if (ni == 3) {
        emit(cross_pt(inside[0], outside[0]), cross_pt(inside[1], outside[0]),
             cross_pt(inside[2], outside[0]));
    } else {  // quad: split into two triangles
        const Vec3 q0 = cross_pt(inside[0], outside[0]);
        const Vec3 q1 = cross_pt(inside[0], outside[1]);
        const Vec3 q2 = cross_pt(inside[1], outside[1]);
        const Vec3 q3 = cross_pt(inside[1], outside[0]);
        emit(q0, q1, q2);
        emit(q0, q2, q3);
    }
}

/// Values at the four corners of the extraction tets: the two triangle
/// vertices, the face center and the cell center.
struct TetValues {
    std::function<double(int)> at_vertex;
    std::function<double(int)> at_face;
    std::function<double(int)> at_cell;
};

namespace detail {

template <typename Fn>
void for_each_tet(const Mesh& mesh, const TetValues& vals, double level, Fn&& fn) {
    for (int p = 0; p < mesh.n_cells(); ++p) {
        const Cell& cell = mesh.cells[p];
        auto visit = [&](int a) {
            const Triangle& t = mesh.triangles[a];
            const std::array<Vec3, 4> x{mesh.vertices[t.v0], mesh.vertices[t.v1],
                                        mesh.faces[t.face].center, cell.center};
            const std::array<double, 4> u{vals.at_vertex(t.v0) - level, vals.at_vertex(t.v1) - level,
                                          vals.at_face(t.face) - level, vals.at_cell(p) - level};
            fn(x, u);
        };
        for (int a : cell.internal_triangles) visit(a);
        for (int a : cell.boundary_triangles) visit(a);
    }
}

}  // namespace detail

/// Volume of the region {u < level} by marching tetrahedra over the cells'
/// triangle-based tet decomposition.
inline double enclosed_volume(const Mesh& mesh, const TetValues& vals, double level = 0.0) {
    double volume = 0.0;
    detail::for_each_tet(mesh, vals, level, [&](const std::array<Vec3, 4>& x,
                                                const std::array<double, 4>& u) {
        const double tv = tet_volume(x[0], x[1], x[2], x[3]);
        volume += tv * detail::tet_negative_fraction(u);
    });
    return volume;
}

/// Tet-corner values from a reconstruction cache of a cell field.
inline TetValues cache_values(const CellField& field, const ReconstructionCache& cache) {
    return {[&cache](int v) { return cache.vertex_values[v]; },
            [&cache](int g) { return cache.face_values[g]; },
            [&field](int p) { return field.values[p]; }};
}

/// Tet-corner values from a point sampler (for exact solutions).
inline TetValues sampled_values(const Mesh& mesh, const std::function<double(const Vec3&)>& f) {
    return {[&mesh, f](int v) { return f(mesh.vertices[v]); },
            [&mesh, f](int g) { return f(mesh.faces[g].center); },
            [&mesh, f](int p) { return f(mesh.cells[p].center); }};
}

/// Triangle soup of the isosurface {u = level}.
inline std::vector<std::array<Vec3, 3>> extract_isosurface(const Mesh& mesh, const TetValues& vals,
                                                           double level = 0.0) {
    std::vector<std::array<Vec3, 3>> tris;
    detail::for_each_tet(mesh, vals, level,
                         [&](const std::array<Vec3, 4>& x, const std::array<double, 4>& u) {
                             marching_tet(x, u, tris);
                         });
    return tris;
}

}  // namespace pmls
