#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmls/mesh.hpp"
#include "pmls/reconstruction.hpp"

namespace pmls {

namespace detail {
inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}
inline void vtk_d(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}
}  // namespace detail

/// Legacy ASCII unstructured grid of the mesh's tetrahedral decomposition
/// (triangle + cell center), with the cell-centered field as CELL_DATA and
/// the reconstructed values at vertices/face centers/cell centers as
/// POINT_DATA.
inline void write_vtk_cell_field(const std::string& path, const Mesh& mesh, const CellField& field,
                                 const ReconstructionCache* cache = nullptr,
                                 const std::string& name = "u") {
    std::ofstream out = detail::open_out(path);
    const std::size_t nv = mesh.vertices.size();
    const std::size_t nf = mesh.faces.size();
    const std::size_t nc = mesh.cells.size();

    out << "# vtk DataFile Version 3.0\n" << name << " on tessellated polyhedral mesh\nASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv + nf + nc << " double\n";
    auto point = [&](const Vec3& p) {
        detail::vtk_d(out, p.x);
        out << ' ';
        detail::vtk_d(out, p.y);
        out << ' ';
        detail::vtk_d(out, p.z);
        out << '\n';
    };
    for (const Vec3& v : mesh.vertices) point(v);
    for (const Face& f : mesh.faces) point(f.center);
    for (const Cell& c : mesh.cells) point(c.center);

    std::size_t ntet = 0;
    for (const Cell& c : mesh.cells)
        ntet += c.internal_triangles.size() + c.boundary_triangles.size();
    out << "CELLS " << ntet << ' ' << 5 * ntet << '\n';
    for (std::size_t p = 0; p < nc; ++p) {
        auto emit = [&](int a) {
            const Triangle& t = mesh.triangles[a];
            out << "4 " << t.v0 << ' ' << t.v1 << ' ' << nv + t.face << ' ' << nv + nf + p << '\n';
        };
        for (int a : mesh.cells[p].internal_triangles) emit(a);
        for (int a : mesh.cells[p].boundary_triangles) emit(a);
    }
    out << "CELL_TYPES " << ntet << '\n';
    for (std::size_t i = 0; i < ntet; ++i) out << "10\n";

    out << "CELL_DATA " << ntet << '\n';
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t p = 0; p < nc; ++p) {
        const std::size_t reps =
            mesh.cells[p].internal_triangles.size() + mesh.cells[p].boundary_triangles.size();
        for (std::size_t i = 0; i < reps; ++i) {
            detail::vtk_d(out, field.values[p]);
            out << '\n';
        }
    }

    if (cache) {
        out << "POINT_DATA " << nv + nf + nc << '\n';
        out << "SCALARS " << name << "_point double 1\nLOOKUP_TABLE default\n";
        for (std::size_t v = 0; v < nv; ++v) {
            detail::vtk_d(out, cache->vertex_values[v]);
            out << '\n';
        }
        for (std::size_t g = 0; g < nf; ++g) {
            detail::vtk_d(out, cache->face_values[g]);
            out << '\n';
        }
        for (std::size_t p = 0; p < nc; ++p) {
            detail::vtk_d(out, field.values[p]);
            out << '\n';
        }
    }
}

/// Legacy ASCII polydata triangle soup (isosurfaces).
inline void write_vtk_triangles(const std::string& path,
                                const std::vector<std::array<Vec3, 3>>& tris,
                                const std::string& title = "isosurface") {
    std::ofstream out = detail::open_out(path);
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
    out << "POINTS " << 3 * tris.size() << " double\n";
    for (const auto& t : tris)
        for (const Vec3& p : t) {
            detail::vtk_d(out, p.x);
            out << ' ';
            detail::vtk_d(out, p.y);
            out << ' ';
            detail::vtk_d(out, p.z);
            out << '\n';
        }
    out << "POLYGONS " << tris.size() << ' ' << 4 * tris.size() << '\n';
    for (std::size_t i = 0; i < tris.size(); ++i)
        out << "3 " << 3 * i << ' ' << 3 * i + 1 << ' ' << 3 * i + 2 << '\n';
}

}  // namespace pmls
