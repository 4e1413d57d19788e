#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmls/geometry.hpp"

namespace pmls {

/// Polygonal face given by an ordered (cyclic) vertex list. The order is
/// counterclockwise seen from outside the owner cell, so tessellated
/// triangle normals point out of the owner.
struct Face {
    std::vector<int> vertices;
    int owner = -1;
    int neighbor = -1;  ///< -1 for a boundary face
    Vec3 center;
    int first_triangle = -1;  ///< triangles [first_triangle, first_triangle + vertices.size())

    bool boundary() const { return neighbor < 0; }
};

/// Triangle of a tessellated face: (v0, v1, face center).
struct Triangle {
    int face = -1;
    int owner = -1;
    int neighbor = -1;
    int v0 = -1, v1 = -1;
    Vec3 center;
    Vec3 normal;  ///< unit, outward w.r.t. the owner cell
    double area = 0.0;

    bool boundary() const { return neighbor < 0; }
};

struct Cell {
    std::vector<int> faces;
    std::vector<int> internal_triangles;  ///< F_p
    std::vector<int> boundary_triangles;  ///< B_p
    std::vector<int> neighbors;           ///< N_p, 1-ring face neighbors
    std::vector<int> vertices;            ///< unique vertex ids
    Vec3 center;
    double volume = 0.0;
    double bbox_volume = 0.0;

    bool boundary() const { return !boundary_triangles.empty(); }
};

/// Immutable polyhedral mesh. Build through build_hex_mesh() or
/// read_polymesh(); both run finalize_mesh() which derives all geometry,
/// adjacency and boundary classification and validates the result.
/// Safe for concurrent reads.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Triangle> triangles;
    std::vector<Cell> cells;
    std::vector<std::vector<int>> vertex_cells;  ///< N_v per vertex
    std::vector<int> internal_cells;             ///< I_int
    std::vector<int> boundary_cells;             ///< I_bdr

    int n_cells() const { return static_cast<int>(cells.size()); }

    /// Outward unit normal of triangle `a` w.r.t. cell `p` (stored once, negated for the neighbor).
    Vec3 outward_normal(int a, int p) const {
        const Triangle& t = triangles[a];
        return p == t.owner ? t.normal : -t.normal;
    }

    /// +1 if `p` owns triangle `a`, -1 if `p` is its neighbor.
    double orientation(int a, int p) const { return p == triangles[a].owner ? 1.0 : -1.0; }

    /// The cell on the other side of internal triangle `a`.
    int other_cell(int a, int p) const {
        const Triangle& t = triangles[a];
        return p == t.owner ? t.neighbor : t.owner;
    }
};

/// Area-weighted face center: centroid over the fan of triangles
/// (vertex mass center, v_j, v_{j+1}).
inline Vec3 face_center(const Face& face, const std::vector<Vec3>& verts) {
    const std::size_t n = face.vertices.size();
    if (n < 3) throw std::invalid_argument("face_center: face needs at least 3 vertices");
    Vec3 vbar{};
    for (int v : face.vertices) vbar += verts[v];
    vbar /= static_cast<double>(n);

    Vec3 acc{};
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Vec3& a = verts[face.vertices[j]];
        const Vec3& b = verts[face.vertices[(j + 1) % n]];
        const double area = triangle_area(vbar, a, b);
        acc += area * triangle_centroid(vbar, a, b);
        total += area;
    }
    if (total <= 0.0) throw std::domain_error("face_center: degenerate face (zero area)");
    return acc / total;
}

/// Volume-weighted cell center: centroid over the hulls
/// (face center, cell vertex mass center, v_j, v_{j+1}) of every face.
inline Vec3 cell_center(const Cell& cell, const Mesh& mesh) {
    Vec3 vbar{};
    for (int v : cell.vertices) vbar += mesh.vertices[v];
    vbar /= static_cast<double>(cell.vertices.size());

    Vec3 acc{};
    double total = 0.0;
    for (int f : cell.faces) {
        const Face& face = mesh.faces[f];
        const std::size_t n = face.vertices.size();
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3& a = mesh.vertices[face.vertices[j]];
            const Vec3& b = mesh.vertices[face.vertices[(j + 1) % n]];
            const double vol = tet_volume(face.center, vbar, a, b);
            acc += vol * (face.center + vbar + a + b) / 4.0;
            total += vol;
        }
    }
    if (total <= 0.0) throw std::domain_error("cell_center: degenerate cell (zero hull volume)");
    return acc / total;
}

/// h_min, h_ave, h_max: reductions of |Omega_p|_B^(1/3) over all cells.
struct CharacteristicLengths {
    double h_min = 0.0, h_ave = 0.0, h_max = 0.0;
};

inline CharacteristicLengths characteristic_lengths(const Mesh& mesh) {
    CharacteristicLengths r;
    r.h_min = std::numeric_limits<double>::max();
    double sum = 0.0;
    for (const Cell& c : mesh.cells) {
        const double h = std::cbrt(c.bbox_volume);
        r.h_min = std::min(r.h_min, h);
        r.h_max = std::max(r.h_max, h);
        sum += h;
    }
    r.h_ave = sum / static_cast<double>(mesh.cells.size());
    return r;
}

namespace detail {

inline void collect_cell_vertices(Cell& cell, const std::vector<Face>& faces) {
    cell.vertices.clear();
    for (int f : cell.faces)
        for (int v : faces[f].vertices) cell.vertices.push_back(v);
    std::sort(cell.vertices.begin(), cell.vertices.end());
    cell.vertices.erase(std::unique(cell.vertices.begin(), cell.vertices.end()),
                        cell.vertices.end());
}

}  // namespace detail

/// Derive all mesh geometry and topology from vertices, faces (vertex lists,
/// owner/neighbor) and cells (face lists). Throws on invalid input.
inline void finalize_mesh(Mesh& mesh) {
    // Face centers and tessellation.
    mesh.triangles.clear();
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        Face& face = mesh.faces[fi];
        const std::size_t n = face.vertices.size();
        if (n < 3)
            throw std::runtime_error("mesh: face " + std::to_string(fi) + " has fewer than 3 vertices");
        for (std::size_t j = 0; j < n; ++j)
            if (face.vertices[j] == face.vertices[(j + 1) % n])
                throw std::runtime_error("mesh: face " + std::to_string(fi) +
                                         " repeats consecutive vertex " +
                                         std::to_string(face.vertices[j]));
        face.center = face_center(face, mesh.vertices);
        face.first_triangle = static_cast<int>(mesh.triangles.size());
        for (std::size_t j = 0; j < n; ++j) {
            Triangle t;
            t.face = static_cast<int>(fi);
            t.owner = face.owner;
            t.neighbor = face.neighbor;
            t.v0 = face.vertices[j];
            t.v1 = face.vertices[(j + 1) % n];
            const Vec3& a = mesh.vertices[t.v0];
            const Vec3& b = mesh.vertices[t.v1];
            t.center = triangle_centroid(a, b, face.center);
            t.area = triangle_area(a, b, face.center);
            if (t.area <= 0.0)
                throw std::runtime_error("mesh: degenerate triangle on face " + std::to_string(fi));
            t.normal = triangle_normal(a, b, face.center);
            mesh.triangles.push_back(t);
        }
    }

    // Per-cell triangle partition, neighbors, vertices.
    for (std::size_t ci = 0; ci < mesh.cells.size(); ++ci) {
        Cell& cell = mesh.cells[ci];
        cell.internal_triangles.clear();
        cell.boundary_triangles.clear();
        cell.neighbors.clear();
        for (int f : cell.faces) {
            const Face& face = mesh.faces[f];
            const int p = static_cast<int>(ci);
            if (face.owner != p && face.neighbor != p)
                throw std::runtime_error("mesh: cell " + std::to_string(ci) +
                                         " lists face it does not bound");
            for (std::size_t j = 0; j < face.vertices.size(); ++j) {
                const int a = face.first_triangle + static_cast<int>(j);
                (face.boundary() ? cell.boundary_triangles : cell.internal_triangles).push_back(a);
            }
            if (!face.boundary())
                cell.neighbors.push_back(face.owner == p ? face.neighbor : face.owner);
        }
        std::sort(cell.neighbors.begin(), cell.neighbors.end());
        cell.neighbors.erase(std::unique(cell.neighbors.begin(), cell.neighbors.end()),
                             cell.neighbors.end());
        detail::collect_cell_vertices(cell, mesh.faces);

        cell.center = cell_center(cell, mesh);

        // Signed divergence-theorem volume over the tessellated boundary.
        double vol = 0.0;
        for (int a : cell.internal_triangles) {
            const Triangle& t = mesh.triangles[a];
            vol += dot(t.center, mesh.outward_normal(a, static_cast<int>(ci))) * t.area;
        }
        for (int a : cell.boundary_triangles) {
            const Triangle& t = mesh.triangles[a];
            vol += dot(t.center, mesh.outward_normal(a, static_cast<int>(ci))) * t.area;
        }
        cell.volume = vol / 3.0;
        if (cell.volume <= 0.0)
            throw std::runtime_error("mesh: cell " + std::to_string(ci) +
                                     " has non-positive volume (bad face orientation?)");

        Vec3 lo = mesh.vertices[cell.vertices.front()];
        Vec3 hi = lo;
        for (int v : cell.vertices) {
            lo = cwise_min(lo, mesh.vertices[v]);
            hi = cwise_max(hi, mesh.vertices[v]);
        }
        const Vec3 e = hi - lo;
        cell.bbox_volume = e.x * e.y * e.z;
    }

    // Vertex -> incident cells.
    mesh.vertex_cells.assign(mesh.vertices.size(), {});
    for (std::size_t ci = 0; ci < mesh.cells.size(); ++ci)
        for (int v : mesh.cells[ci].vertices)
            mesh.vertex_cells[v].push_back(static_cast<int>(ci));

    mesh.internal_cells.clear();
    mesh.boundary_cells.clear();
    for (std::size_t ci = 0; ci < mesh.cells.size(); ++ci)
        (mesh.cells[ci].boundary() ? mesh.boundary_cells : mesh.internal_cells)
            .push_back(static_cast<int>(ci));

    // Closed-surface identity per cell.
    for (std::size_t ci = 0; ci < mesh.cells.size(); ++ci) {
        const Cell& cell = mesh.cells[ci];
        Vec3 s{};
        double surf = 0.0;
        auto add = [&](int a) {
            const Triangle& t = mesh.triangles[a];
            s += t.area * mesh.outward_normal(a, static_cast<int>(ci));
            surf += t.area;
        };
        for (int a : cell.internal_triangles) add(a);
        for (int a : cell.boundary_triangles) add(a);
        if (norm(s) > 1e-9 * surf)
            throw std::runtime_error("mesh: cell " + std::to_string(ci) +
                                     " boundary is not closed (orientation error)");
    }
}

}  // namespace pmls
