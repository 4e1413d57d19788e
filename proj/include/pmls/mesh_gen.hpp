#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "pmls/mesh.hpp"

namespace pmls {

/// Structured hexahedral mesh of `box` with n^3 cells, treated as general
/// polyhedra (every quad face is tessellated by 4 triangles through its
/// center). With perturbation > 0 each interior vertex is displaced by a
/// uniform draw in [-perturbation, perturbation] times the local spacing,
/// per component, which makes the quad faces non-planar. Boundary vertices
/// stay on the box surface.
///
/// Reproducibility: draws come from std::mt19937_64(seed), three per
/// interior vertex in vertex-index order (x fastest), mapped to [-1, 1) as
/// (u >> 11) * 2^-52 - 1, so meshes are bit-identical for a given seed.
inline Mesh build_hex_mesh(const AxisBox& box, int n, double perturbation = 0.0,
                           std::uint64_t seed = 0) {
    if (!box.valid()) throw std::invalid_argument("build_hex_mesh: box extents must be positive");
    if (n < 2) throw std::invalid_argument("build_hex_mesh: n must be at least 2");
    if (perturbation < 0.0 || perturbation >= 0.3)
        throw std::invalid_argument("build_hex_mesh: perturbation must be in [0, 0.3)");

    const int nv = n + 1;
    const Vec3 s{box.extent().x / n, box.extent().y / n, box.extent().z / n};

    Mesh mesh;
    mesh.vertices.resize(static_cast<std::size_t>(nv) * nv * nv);
    auto vid = [nv](int i, int j, int k) { return (i * nv + j) * nv + k; };
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nv; ++j)
            for (int k = 0; k < nv; ++k)
                mesh.vertices[vid(i, j, k)] = box.lo + Vec3{i * s.x, j * s.y, k * s.z};

    if (perturbation > 0.0) {
        std::mt19937_64 rng(seed);
        auto draw = [&rng] { return (rng() >> 11) * 0x1.0p-52 - 1.0; };
        for (int i = 1; i < n; ++i)
            for (int j = 1; j < n; ++j)
                for (int k = 1; k < n; ++k) {
                    Vec3& v = mesh.vertices[vid(i, j, k)];
                    v.x += perturbation * s.x * draw();
                    v.y += perturbation * s.y * draw();
                    v.z += perturbation * s.z * draw();
                }
    }

    auto cid = [n](int i, int j, int k) { return (i * n + j) * n + k; };
    mesh.cells.resize(static_cast<std::size_t>(n) * n * n);

    // Faces per axis slice. The owner is the cell on the minus side when it
    // exists; vertex order is chosen so triangle normals point out of the owner.
    auto add_face = [&](std::vector<int> verts, int owner, int neighbor) {
        Face f;
        f.vertices = std::move(verts);
        f.owner = owner;
        f.neighbor = neighbor;
        const int id = static_cast<int>(mesh.faces.size());
        mesh.faces.push_back(std::move(f));
        mesh.cells[owner].faces.push_back(id);
        if (neighbor >= 0) mesh.cells[neighbor].faces.push_back(id);
    };

    for (int i = 0; i <= n; ++i)  // faces normal to x
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                // counterclockwise in (y,z) seen from +x
                std::vector<int> q{vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1),
                                   vid(i, j, k + 1)};
                if (i == 0) {
                    std::reverse(q.begin(), q.end());  // outward is -x
                    add_face(std::move(q), cid(0, j, k), -1);
                } else {
                    add_face(std::move(q), cid(i - 1, j, k), i == n ? -1 : cid(i, j, k));
                }
            }
    for (int j = 0; j <= n; ++j)  // faces normal to y
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                // counterclockwise in (z,x) seen from +y
                std::vector<int> q{vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1),
                                   vid(i + 1, j, k)};
                if (j == 0) {
                    std::reverse(q.begin(), q.end());
                    add_face(std::move(q), cid(i, 0, k), -1);
                } else {
                    add_face(std::move(q), cid(i, j - 1, k), j == n ? -1 : cid(i, j, k));
                }
            }
    for (int k = 0; k <= n; ++k)  // faces normal to z
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                // counterclockwise in (x,y) seen from +z
                std::vector<int> q{vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k),
                                   vid(i, j + 1, k)};
                if (k == 0) {
                    std::reverse(q.begin(), q.end());
                    add_face(std::move(q), cid(i, j, 0), -1);
                } else {
                    add_face(std::move(q), cid(i, j, k - 1), k == n ? -1 : cid(i, j, k));
                }
            }

    finalize_mesh(mesh);
    return mesh;
}

}  // namespace pmls
