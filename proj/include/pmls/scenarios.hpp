#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pmls/field.hpp"
#include "pmls/mesh.hpp"
#include "pmls/velocity.hpp"

namespace pmls {

/// Closed seed surfaces with exact signed distance functions.
struct Sphere {
    Vec3 center;
    double radius;
};
struct Box {
    Vec3 center;
    double half_width;
};
using ShapeSpec = std::variant<Sphere, Box>;

/// Signed distance, positive outside and negative inside. The box distance
/// is the Euclidean one (corner-exact), whose zero level is the cube surface.
inline double sdf(const ShapeSpec& shape, const Vec3& x) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return norm(x - s.center) - s.radius;
            } else {
                const Vec3 q{std::abs(x.x - s.center.x) - s.half_width,
                             std::abs(x.y - s.center.y) - s.half_width,
                             std::abs(x.z - s.center.z) - s.half_width};
                const Vec3 qp = cwise_max(q, Vec3{0, 0, 0});
                return norm(qp) + std::min(max_component(q), 0.0);
            }
        },
        shape);
}

enum class CaseMotion {
    Translate,         ///< rigid translation by t*v
    Rotate,            ///< rigid rotation about the x3 axis
    Offset,            ///< normal expansion: u = u0 - t
    Shrink,            ///< normal shrinking: eroded shape, radius r - t
    RotateShrink,      ///< rotation plus 0.1-rate shrinking
    ReverseTranslate,  ///< out-and-back translation; compared against u0 at T
    ReverseRotate,     ///< four-phase rotation returning to the start
};

/// One row of the test catalog: seed shape, velocity, final time, and the
/// closed-form solution where one exists.
struct TestCase {
    std::string name;
    ShapeSpec shape;
    VelocityField velocity;
    double final_time = 0.0;
    CaseMotion motion = CaseMotion::Translate;
    Vec3 translate_v{};        ///< Translate / ReverseTranslate
    double offset_sign = 0.0;  ///< Offset: u = u0 - sign*t

    bool has_exact() const {
        return motion != CaseMotion::ReverseTranslate && motion != CaseMotion::ReverseRotate;
    }
};

namespace detail {

inline Vec3 rotate_z(const Vec3& x, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {x.x * c - x.y * s, x.x * s + x.y * c, x.z};
}

inline ShapeSpec with_radius(const ShapeSpec& shape, double r) {
    if (std::holds_alternative<Sphere>(shape)) {
        Sphere s = std::get<Sphere>(shape);
        s.radius = r;
        return s;
    }
    Box b = std::get<Box>(shape);
    b.half_width = r;
    return b;
}

inline double shape_radius(const ShapeSpec& shape) {
    return std::holds_alternative<Sphere>(shape) ? std::get<Sphere>(shape).radius
                                                 : std::get<Box>(shape).half_width;
}

}  // namespace detail

/// Closed-form solution of the level-set equation for the catalog cases.
/// Rigid motions evaluate the initial distance at the inversely moved point;
/// normal flow offsets or erodes the distance field.
inline double exact_solution(const TestCase& tc, const Vec3& x, double t) {
    switch (tc.motion) {
        case CaseMotion::Translate:
            return sdf(tc.shape, x - t * tc.translate_v);
        case CaseMotion::Rotate:
            return sdf(tc.shape, detail::rotate_z(x, M_PI * t));
        case CaseMotion::Offset:
            return sdf(tc.shape, x) - tc.offset_sign * t;
        case CaseMotion::Shrink: {
            const double r = detail::shape_radius(tc.shape) - t;
            if (r <= 0.0) throw std::domain_error("exact_solution: shape vanished");
            return sdf(detail::with_radius(tc.shape, r), x);
        }
        case CaseMotion::RotateShrink: {
            const double r = detail::shape_radius(tc.shape) - 0.1 * t;
            if (r <= 0.0) throw std::domain_error("exact_solution: shape vanished");
            return sdf(detail::with_radius(tc.shape, r), detail::rotate_z(x, M_PI * t));
        }
        default:
            throw std::logic_error("exact_solution: case '" + tc.name + "' has no closed form");
    }
}

/// Boundary evaluator u_D(x, t) from the known exact solution.
inline BoundaryEvaluator dirichlet_evaluator(const TestCase& tc) {
    if (!tc.has_exact())
        throw std::invalid_argument("dirichlet_evaluator: case has no exact solution");
    return [tc](const Vec3& x, double t) { return exact_solution(tc, x, t); };
}

inline std::vector<std::string> test_case_names() {
    return {"TS", "RS", "ES", "SS", "TC", "RC", "EC", "SC", "RSS", "RSC", "TSREV", "RSREV"};
}

/// Test catalog. The sphere/cube rows use the domain [-1.25, 1.25]^3.
inline TestCase make_test_case(const std::string& name) {
    const Vec3 zaxis{0, 0, 1};
    TestCase tc;
    tc.name = name;
    if (name == "TS" || name == "TC") {
        tc.shape = name == "TS" ? ShapeSpec{Sphere{{-0.5, -0.5, -0.5}, 0.5}}
                                : ShapeSpec{Box{{-0.5, -0.5, -0.5}, 0.5}};
        tc.translate_v = {2, 2, 2};
        tc.velocity = VelocityField::constant(tc.translate_v);
        tc.final_time = 0.5;
        tc.motion = CaseMotion::Translate;
    } else if (name == "RS" || name == "RC") {
        tc.shape = name == "RS" ? ShapeSpec{Sphere{{0.625, 0, 0}, 0.5}}
                                : ShapeSpec{Box{{0.625, 0, 0}, 0.5}};
        tc.velocity = VelocityField::rotation(zaxis, M_PI);
        tc.final_time = 2.0;
        tc.motion = CaseMotion::Rotate;
    } else if (name == "ES" || name == "EC") {
        tc.shape = name == "ES" ? ShapeSpec{Sphere{{0, 0, 0}, 0.5}} : ShapeSpec{Box{{0, 0, 0}, 0.5}};
        tc.velocity = VelocityField::normal(+1.0);
        tc.final_time = 0.5;
        tc.motion = CaseMotion::Offset;
        tc.offset_sign = +1.0;
    } else if (name == "SS" || name == "SC") {
        tc.shape = name == "SS" ? ShapeSpec{Sphere{{0, 0, 0}, 1.0}} : ShapeSpec{Box{{0, 0, 0}, 1.0}};
        tc.velocity = VelocityField::normal(-1.0);
        tc.final_time = 0.5;
        tc.motion = CaseMotion::Shrink;
    } else if (name == "RSS" || name == "RSC") {
        tc.shape = name == "RSS" ? ShapeSpec{Sphere{{0.625, 0, 0}, 0.5}}
                                 : ShapeSpec{Box{{0.625, 0, 0}, 0.5}};
        tc.velocity = VelocityField::composite(VelocityField::rotation(zaxis, M_PI), -0.1);
        tc.final_time = 1.0;
        tc.motion = CaseMotion::RotateShrink;
    } else if (name == "TSREV") {
        tc.shape = Sphere{{-0.5, -0.5, -0.5}, 0.5};
        tc.translate_v = {2, 2, 2};
        tc.velocity = VelocityField::piecewise({{1.0, VelocityField::constant({2, 2, 2})},
                                                {2.0, VelocityField::constant({-2, -2, -2})}});
        tc.final_time = 2.0;
        tc.motion = CaseMotion::ReverseTranslate;
    } else if (name == "RSREV") {
        // Four quarter-turns about changing axes composing to the identity.
        tc.shape = Sphere{{0.625, 0, 0}, 0.5};
        tc.velocity = VelocityField::piecewise({
            {0.5, VelocityField::rotation({0, 1, 0}, -M_PI)},
            {1.0, VelocityField::rotation({1, 0, 0}, -M_PI)},
            {1.5, VelocityField::rotation({0, 0, 1}, M_PI)},
            {2.0, VelocityField::rotation({1, 0, 0}, M_PI)},
        });
        tc.final_time = 2.0;
        tc.motion = CaseMotion::ReverseRotate;
    } else {
        throw std::invalid_argument("make_test_case: unknown case '" + name + "'");
    }
    return tc;
}

/// Initial condition: signed distance sampled at the cell centers.
inline CellField initial_field(const TestCase& tc, const Mesh& mesh) {
    CellField u;
    u.time = 0.0;
    u.values.resize(mesh.cells.size());
    for (std::size_t p = 0; p < mesh.cells.size(); ++p)
        u.values[p] = sdf(tc.shape, mesh.cells[p].center);
    return u;
}

}  // namespace pmls
