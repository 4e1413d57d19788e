#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pmls {

/// 3D point / vector with double components.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr Vec3& operator/=(double s) { x /= s; y /= s; z /= s; return *this; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

using Point3 = Vec3;

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a /= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const Vec3& a) { return dot(a, a); }

/// Regularized norm sqrt(|a|^2 + delta^2); never zero for delta > 0.
inline double norm_reg(const Vec3& a, double delta) { return std::sqrt(dot(a, a) + delta * delta); }

inline Vec3 normalized(const Vec3& a) {
    double n = norm(a);
    if (n == 0.0) throw std::domain_error("normalized: zero vector");
    return a / n;
}

inline bool finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline Vec3 cwise_min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 cwise_max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline double max_component(const Vec3& a) { return std::max(a.x, std::max(a.y, a.z)); }

/// Axis-aligned box.
struct AxisBox {
    Vec3 lo, hi;

    Vec3 extent() const { return hi - lo; }
    double volume() const {
        Vec3 e = extent();
        return e.x * e.y * e.z;
    }
    bool valid() const {
        Vec3 e = extent();
        return e.x > 0.0 && e.y > 0.0 && e.z > 0.0;
    }
};

/// Area of triangle (a, b, c).
inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

inline Vec3 triangle_centroid(const Vec3& a, const Vec3& b, const Vec3& c) {
    return (a + b + c) / 3.0;
}

/// Unit normal of triangle (a, b, c), right-handed with the vertex order.
inline Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    return normalized(cross(b - a, c - a));
}

/// Signed volume of tetrahedron (a, b, c, d); positive when (b-a, c-a, d-a) is right-handed.
inline double tet_volume_signed(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return dot(b - a, cross(c - a, d - a)) / 6.0;
}

inline double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return std::abs(tet_volume_signed(a, b, c, d));
}

}  // namespace pmls
