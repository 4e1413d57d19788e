#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "pmls/mesh_gen.hpp"
#include "pmls/mesh_io.hpp"
#include "pmls/reconstruction.hpp"
#include "support/testutil.hpp"

using namespace pmls;
using testutil::sample_field;

namespace {

const AxisBox kDomain{{-1.25, -1.25, -1.25}, {1.25, 1.25, 1.25}};

Mesh two_cubes() {
    std::istringstream in(
        "polymesh 1\n"
        "vertices 12\n"
        "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
        "0 0 1\n1 0 1\n1 1 1\n0 1 1\n"
        "2 0 0\n2 1 0\n2 0 1\n2 1 1\n"
        "faces 11\n"
        "4 0 3 2 1\n4 4 5 6 7\n4 0 1 5 4\n4 2 3 7 6\n4 0 4 7 3\n"
        "4 1 2 6 5\n"
        "4 8 9 11 10\n4 1 2 9 8\n4 5 10 11 6\n4 1 8 10 5\n4 9 2 6 11\n"
        "cells 2\n"
        "6 0 1 2 3 4 5\n"
        "6 5 6 7 8 9 10\n");
    return read_polymesh(in);
}

// Brute-force weighted least squares for the cell gradient: build the
// overdetermined system row by row and solve the normal equations densely.
Vec3 dense_gradient_oracle(const Mesh& mesh, const CellField& u, int p) {
    const Cell& cell = mesh.cells[p];
    std::vector<std::vector<double>> m(3, std::vector<double>(3, 0.0));
    std::vector<double> r(3, 0.0);
    for (int q : cell.neighbors) {
        const Vec3 d = mesh.cells[q].center - cell.center;
        const double w = 1.0 / norm(d);
        const double row[3] = {w * d.x, w * d.y, w * d.z};
        const double rhs = w * (u.values[q] - u.values[p]);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            r[i] += row[i] * rhs;
        }
    }
    auto x = testutil::dense_solve(m, r);
    return {x[0], x[1], x[2]};
}

}  // namespace

TEST_CASE("cell gradient reproduces affine fields") {
    Mesh m = build_hex_mesh(kDomain, 4, 0.15, 2);
    CellField u = sample_field(m, [](const Vec3& x) { return 2 * x.x - 3 * x.y + x.z; });
    for (int p = 0; p < m.n_cells(); ++p) {
        Vec3 g = ls_cell_gradient(m, u, p, StencilKind::LocalOnly);
        CHECK(norm(g - Vec3{2, -3, 1}) < 1e-12);
    }
}

TEST_CASE("cell gradient of a constant field vanishes") {
    Mesh m = build_hex_mesh(kDomain, 3);
    CellField u = sample_field(m, [](const Vec3&) { return 4.2; });
    for (int p = 0; p < m.n_cells(); ++p)
        CHECK(norm(ls_cell_gradient(m, u, p, StencilKind::LocalOnly)) < 1e-13);
}

TEST_CASE("cell gradient matches the dense least-squares oracle") {
    Mesh m = build_hex_mesh({{0, 0, 0}, {3, 3, 3}}, 3);
    CellField u = sample_field(m, [](const Vec3& x) { return x.x * x.x; });
    const int center = (1 * 3 + 1) * 3 + 1;
    REQUIRE(m.cells[center].neighbors.size() == 6);
    Vec3 g = ls_cell_gradient(m, u, center, StencilKind::LocalOnly);
    Vec3 o = dense_gradient_oracle(m, u, center);
    CHECK(norm(g - o) < 1e-12);
}

TEST_CASE("Dirichlet and local stencils coincide on internal cells") {
    Mesh m = build_hex_mesh(kDomain, 4, 0.1, 6);
    CellField u = sample_field(m, [](const Vec3& x) { return std::sin(x.x) + x.y * x.z; });
    std::vector<double> bvals(m.triangles.size(), 123.0);  // arbitrary; unused on internal cells
    for (int p : m.internal_cells) {
        Vec3 gd = ls_cell_gradient(m, u, p, StencilKind::DirichletAugmented, &bvals);
        Vec3 gl = ls_cell_gradient(m, u, p, StencilKind::LocalOnly);
        CHECK(gd.x == gl.x);
        CHECK(gd.y == gl.y);
        CHECK(gd.z == gl.z);
    }
}

TEST_CASE("vertex value is exact for affine data") {
    Mesh m = build_hex_mesh(kDomain, 4, 0.2, 3);
    testutil::Affine f{0.7, {0.4, -0.2, 0.5}};
    CellField u = sample_field(m, f);
    auto cache = reconstruct_stages(m, u, StencilKind::LocalOnly);
    for (std::size_t v = 0; v < m.vertices.size(); ++v)
        CHECK(cache.vertex_values[v] == Catch::Approx(f(m.vertices[v])).margin(1e-11));
}

TEST_CASE("vertex value with a single incident cell is that cell's extrapolation") {
    std::istringstream in(
        "polymesh 1\n"
        "vertices 8\n"
        "0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n"
        "faces 6\n"
        "4 0 3 2 1\n4 4 5 6 7\n4 0 1 5 4\n4 2 3 7 6\n4 0 4 7 3\n4 1 2 6 5\n"
        "cells 1\n6 0 1 2 3 4 5\n");
    Mesh m = read_polymesh(in);
    CellField u;
    u.values = {2.5};
    std::vector<Vec3> grads{{0.3, 0.1, -0.2}};
    for (int v = 0; v < 8; ++v) {
        double expect = 2.5 + dot(grads[0], m.vertices[v] - m.cells[0].center);
        CHECK(vertex_value(m, u, grads, v) == Catch::Approx(expect).margin(1e-14));
    }
}

TEST_CASE("vertex value matches direct evaluation on 8 incident cells") {
    Mesh m = build_hex_mesh({{0, 0, 0}, {2, 2, 2}}, 2);
    CellField u = sample_field(m, [](const Vec3& x) { return x.x * x.x; });
    std::vector<Vec3> grads(m.n_cells());
    for (int p = 0; p < m.n_cells(); ++p) grads[p] = ls_cell_gradient(m, u, p, StencilKind::LocalOnly);

    // The center vertex (1,1,1) touches all 8 cells.
    int vc = -1;
    for (std::size_t v = 0; v < m.vertices.size(); ++v)
        if (norm(m.vertices[v] - Vec3{1, 1, 1}) < 1e-12) vc = static_cast<int>(v);
    REQUIRE(vc >= 0);
    REQUIRE(m.vertex_cells[vc].size() == 8);

    // Independent evaluation of the inverse-distance weighted average.
    double num = 0.0, den = 0.0;
    for (int p : m.vertex_cells[vc]) {
        const Vec3 d = m.vertices[vc] - m.cells[p].center;
        const double w = 1.0 / norm(d);
        num += w * (u.values[p] + dot(grads[p], d));
        den += w;
    }
    CHECK(vertex_value(m, u, grads, vc) == Catch::Approx(num / den).epsilon(1e-14));
}

TEST_CASE("face value is exact for affine and constant fields") {
    Mesh m = build_hex_mesh(kDomain, 3, 0.2, 8);
    testutil::Affine f{-0.2, {0.3, 0.6, -0.4}};
    CellField u = sample_field(m, f);
    auto cache = reconstruct_stages(m, u, StencilKind::LocalOnly);
    for (std::size_t g = 0; g < m.faces.size(); ++g)
        CHECK(cache.face_values[g] == Catch::Approx(f(m.faces[g].center)).margin(1e-11));

    CellField c = sample_field(m, [](const Vec3&) { return 3.14; });
    auto cc = reconstruct_stages(m, c, StencilKind::LocalOnly);
    for (std::size_t g = 0; g < m.faces.size(); ++g)
        CHECK(cc.face_values[g] == Catch::Approx(3.14).margin(1e-12));
}

TEST_CASE("face value matches the dense diamond-fit oracle on two cubes") {
    Mesh m = two_cubes();
    CellField u = sample_field(m, [](const Vec3& x) { return x.x * x.x + 0.5 * x.y; });
    auto cache = reconstruct_stages(m, u, StencilKind::LocalOnly);

    const int g = 5;  // shared face
    REQUIRE_FALSE(m.faces[g].boundary());

    // Dense weighted normal equations for (a, b) over P_g.
    std::vector<std::vector<double>> nm(4, std::vector<double>(4, 0.0));
    std::vector<double> nr(4, 0.0);
    auto add = [&](const Vec3& x, double val) {
        const Vec3 d = x - m.faces[g].center;
        const double w = 1.0 / norm(d);
        const double phi[4] = {w, w * d.x, w * d.y, w * d.z};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) nm[i][j] += phi[i] * phi[j];
            nr[i] += phi[i] * w * val;
        }
    };
    for (int v : m.faces[g].vertices) add(m.vertices[v], cache.vertex_values[v]);
    add(m.cells[0].center, u.values[0]);
    add(m.cells[1].center, u.values[1]);
    auto sol = testutil::dense_solve(nm, nr);

    CHECK(cache.face_values[g] == Catch::Approx(sol[0]).margin(1e-12));
}

TEST_CASE("triangle gradient saturates exactly at a unit affine slope") {
    Mesh m = build_hex_mesh(kDomain, 3, 0.1, 4);
    const Vec3 b = normalized(Vec3{1, 1, 1});
    CellField u = sample_field(m, [&](const Vec3& x) { return dot(b, x) + 0.2; });
    auto cache = reconstruct_stages(m, u, StencilKind::LocalOnly);
    for (std::size_t a = 0; a < m.triangles.size(); ++a) {
        CHECK(norm(cache.triangle_gradients[a]) == Catch::Approx(1.0).margin(1e-9));
        CHECK(norm(cache.triangle_gradients[a] - b) < 1e-9);
    }
}

TEST_CASE("triangle gradient of the zero field is zero") {
    Mesh m = build_hex_mesh(kDomain, 2);
    CellField u = sample_field(m, [](const Vec3&) { return 0.0; });
    auto cache = reconstruct_stages(m, u, StencilKind::LocalOnly);
    for (std::size_t a = 0; a < m.triangles.size(); ++a) {
        CHECK(norm(cache.triangle_gradients[a]) < 1e-13);
        CHECK(std::abs(cache.triangle_alphas[a]) < 1e-13);
    }
}

namespace {

// Projected-gradient minimization of the same weighted objective on the unit
// ball; independent oracle for the constrained fit.
Vec3 projected_gradient_oracle(const std::vector<Vec3>& pts, const std::vector<double>& vals,
                               const Vec3& center) {
    const int n = static_cast<int>(pts.size());
    std::vector<Vec3> d(n);
    std::vector<double> w2(n);
    for (int i = 0; i < n; ++i) {
        d[i] = pts[i] - center;
        w2[i] = 1.0 / norm2(d[i]);
    }
    Vec3 beta{};
    double alpha = 0.0;
    const double step = 2e-3;
    for (int it = 0; it < 400000; ++it) {
        // closed-form alpha for fixed beta
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += w2[i] * (vals[i] - dot(beta, d[i]));
            den += w2[i];
        }
        alpha = num / den;
        Vec3 grad{};
        for (int i = 0; i < n; ++i) {
            const double res = alpha + dot(beta, d[i]) - vals[i];
            grad += 2.0 * w2[i] * res * d[i];
        }
        beta -= step * grad;
        const double bn = norm(beta);
        if (bn > 1.0) beta /= bn;
    }
    return beta;
}

}  // namespace

TEST_CASE("steep field is clamped to the unit sphere in the fit direction") {
    Mesh m = two_cubes();
    CellField u = sample_field(m, [](const Vec3& x) { return 5.0 * x.x; });
    // Exact values everywhere (the field is affine, so stages reproduce it).
    std::vector<double> vvals(m.vertices.size());
    for (std::size_t v = 0; v < m.vertices.size(); ++v) vvals[v] = 5.0 * m.vertices[v].x;
    std::vector<double> fvals(m.faces.size());
    for (std::size_t g = 0; g < m.faces.size(); ++g) fvals[g] = 5.0 * m.faces[g].center.x;
    std::vector<Vec3> cgrads(m.n_cells(), Vec3{5, 0, 0});

    const Face& shared = m.faces[5];
    for (std::size_t j = 0; j < shared.vertices.size(); ++j) {
        const int a = shared.first_triangle + static_cast<int>(j);
        TriangleFit fit = triangle_gradient(m, a, u, vvals, fvals, cgrads);
        CHECK(fit.saturated);
        CHECK(norm(fit.gradient) == Catch::Approx(1.0).margin(1e-12));
        CHECK(fit.gradient.x == Catch::Approx(1.0).margin(1e-9));

        // Projected-gradient oracle over the same point set.
        const Triangle& tri = m.triangles[a];
        std::vector<Vec3> pts{m.vertices[tri.v0], m.vertices[tri.v1], shared.center,
                              m.cells[tri.owner].center, m.cells[tri.neighbor].center};
        std::vector<double> vals;
        for (const Vec3& p : pts) vals.push_back(5.0 * p.x);
        Vec3 oracle = projected_gradient_oracle(pts, vals, tri.center);
        CHECK(norm(fit.gradient - oracle) < 1e-3);
    }
}

TEST_CASE("constraint holds on random fields") {
    Mesh m = build_hex_mesh(kDomain, 4, 0.2, 13);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        CellField u;
        u.values.resize(m.cells.size());
        for (double& x : u.values) x = dist(rng);
        auto cache = reconstruct_stages(m, u, StencilKind::LocalOnly);
        for (const Vec3& g : cache.triangle_gradients) CHECK(norm(g) <= 1.0 + 1e-12);
    }
}

TEST_CASE("representative gradient averages identical triangle gradients to itself") {
    Mesh m = build_hex_mesh(kDomain, 3);
    std::vector<Vec3> tg(m.triangles.size(), Vec3{0.2, -0.4, 0.6});
    for (int p : m.internal_cells) {
        Vec3 g = representative_cell_gradient(m, tg, p, RepresentativeMode::AllFaces);
        CHECK(norm(g - Vec3{0.2, -0.4, 0.6}) < 1e-14);
    }
}

TEST_CASE("Soner filtering drops inflow boundary triangles") {
    Mesh m = build_hex_mesh(kDomain, 2);
    const int p = m.boundary_cells.front();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Vec3> tg(m.triangles.size());
    for (Vec3& g : tg) g = {dist(rng), dist(rng), dist(rng)};

    std::vector<char> excluded(m.triangles.size(), 0);
    excluded[m.cells[p].boundary_triangles.front()] = 1;

    Vec3 all = representative_cell_gradient(m, tg, p, RepresentativeMode::AllFaces);
    Vec3 filtered = representative_cell_gradient(m, tg, p, RepresentativeMode::SonerFiltered, &excluded);
    CHECK(norm(all - filtered) > 1e-12);

    // Direct summation oracle for the filtered mean.
    Vec3 num{};
    double den = 0.0;
    auto add = [&](int a) {
        const double w = 1.0 / norm(m.triangles[a].center - m.cells[p].center);
        num += w * tg[a];
        den += w;
    };
    for (int a : m.cells[p].internal_triangles) add(a);
    for (int a : m.cells[p].boundary_triangles)
        if (!excluded[a]) add(a);
    CHECK(norm(filtered - num / den) < 1e-14);
}

TEST_CASE("excluding every triangle of an isolated cell signals a degenerate stencil") {
    std::istringstream in(
        "polymesh 1\n"
        "vertices 8\n"
        "0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n"
        "faces 6\n"
        "4 0 3 2 1\n4 4 5 6 7\n4 0 1 5 4\n4 2 3 7 6\n4 0 4 7 3\n4 1 2 6 5\n"
        "cells 1\n6 0 1 2 3 4 5\n");
    Mesh m = read_polymesh(in);
    std::vector<Vec3> tg(m.triangles.size(), Vec3{1, 0, 0});
    std::vector<char> excluded(m.triangles.size(), 1);
    CHECK_THROWS_AS(
        representative_cell_gradient(m, tg, 0, RepresentativeMode::SonerFiltered, &excluded),
        DegenerateStencil);
}

TEST_CASE("full stack reproduces random affine fields on a perturbed mesh") {
    Mesh m = build_hex_mesh(kDomain, 4, 0.15, 31);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        testutil::Affine f = testutil::random_affine(rng, 1.0);
        CellField u = sample_field(m, f);
        auto cache = build_cache(m, u, StencilKind::LocalOnly);
        for (int p = 0; p < m.n_cells(); ++p)
            CHECK(norm(cache.cell_gradients[p] - f.b) < 1e-11);
        for (std::size_t v = 0; v < m.vertices.size(); ++v)
            CHECK(cache.vertex_values[v] == Catch::Approx(f(m.vertices[v])).margin(1e-11));
        for (std::size_t g = 0; g < m.faces.size(); ++g)
            CHECK(cache.face_values[g] == Catch::Approx(f(m.faces[g].center)).margin(1e-11));
        for (std::size_t a = 0; a < m.triangles.size(); ++a)
            CHECK(norm(cache.triangle_gradients[a] - f.b) < 1e-10);
        for (int p = 0; p < m.n_cells(); ++p)
            CHECK(norm(cache.representative_gradients[p] - f.b) < 1e-10);
    }
}

TEST_CASE("scaling the field scales the reconstruction") {
    Mesh m = build_hex_mesh(kDomain, 3, 0.1, 23);
    CellField u = sample_field(m, [](const Vec3& x) { return 0.3 * x.x - 0.1 * x.y * x.y; });
    CellField u2 = u;
    const double c = 0.37;
    for (double& x : u2.values) x *= c;

    auto ca = reconstruct_stages(m, u, StencilKind::LocalOnly);
    auto cb = reconstruct_stages(m, u2, StencilKind::LocalOnly);
    for (int p = 0; p < m.n_cells(); ++p)
        CHECK(norm(cb.cell_gradients[p] - c * ca.cell_gradients[p]) < 1e-12);
    for (std::size_t v = 0; v < m.vertices.size(); ++v)
        CHECK(cb.vertex_values[v] == Catch::Approx(c * ca.vertex_values[v]).margin(1e-12));
    for (std::size_t g = 0; g < m.faces.size(); ++g)
        CHECK(cb.face_values[g] == Catch::Approx(c * ca.face_values[g]).margin(1e-12));
    // Unsaturated triangle fits scale; saturated ones keep direction.
    for (std::size_t a = 0; a < m.triangles.size(); ++a) {
        const Vec3 ga = ca.triangle_gradients[a];
        const Vec3 gb = cb.triangle_gradients[a];
        if (norm(ga) * c < 1.0 - 1e-9 && norm(ga) < 1.0 - 1e-9) {
            CHECK(norm(gb - c * ga) < 1e-10);
        } else {
            const double cosang = dot(normalized(ga), normalized(gb));
            CHECK(cosang > 1.0 - 1e-8);
        }
    }
}
