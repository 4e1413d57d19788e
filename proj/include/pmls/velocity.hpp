#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "pmls/geometry.hpp"

namespace pmls {

/// Regularization constant for |x|_delta = sqrt(|x|^2 + delta^2).
struct Delta {
    double value = 1e-12;
};

/// Velocity field of the transport equation. Normal and Composite fields
/// depend on the level-set gradient, which the caller supplies frozen at the
/// previous time level (semi-implicit treatment).
class VelocityField {
public:
    struct Constant {
        Vec3 v;
    };
    /// v(x) = rate * (x cross axis); axis (0,0,1) with rate pi gives
    /// (pi x2, -pi x1, 0).
    struct Rotation {
        Vec3 axis;
        double rate;
    };
    struct Normal {
        double sign;  ///< +1 expansion, -1 shrinking
    };
    struct Composite {
        std::shared_ptr<VelocityField> advective;
        double normal_coeff;
    };
    struct PiecewiseInTime {
        std::vector<std::pair<double, VelocityField>> pieces;  ///< (end time, field)
    };

    VelocityField() : node_(Constant{{0, 0, 0}}) {}
    VelocityField(Constant c) : node_(std::move(c)) {}
    VelocityField(Rotation r) : node_(std::move(r)) {}
    VelocityField(Normal n) : node_(std::move(n)) {}
    VelocityField(Composite c) : node_(std::move(c)) {}
    VelocityField(PiecewiseInTime p) : node_(std::move(p)) {
        double prev = 0.0;
        for (const auto& [end, field] : std::get<PiecewiseInTime>(node_).pieces) {
            if (end <= prev)
                throw std::invalid_argument("VelocityField: piecewise intervals must advance");
            prev = end;
        }
    }

    static VelocityField constant(const Vec3& v) { return Constant{v}; }
    static VelocityField rotation(const Vec3& axis, double rate) { return Rotation{axis, rate}; }
    static VelocityField normal(double sign) { return Normal{sign}; }
    static VelocityField composite(VelocityField advective, double normal_coeff) {
        return Composite{std::make_shared<VelocityField>(std::move(advective)), normal_coeff};
    }
    static VelocityField piecewise(std::vector<std::pair<double, VelocityField>> pieces) {
        return PiecewiseInTime{std::move(pieces)};
    }

    /// Evaluate at (x, t) with the (frozen) gradient `grad` for normal parts.
    Vec3 eval(const Vec3& x, double t, const Vec3& grad, const Delta& delta) const {
        return std::visit(
            [&](const auto& node) -> Vec3 {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    return node.v;
                } else if constexpr (std::is_same_v<T, Rotation>) {
                    return node.rate * cross(x, node.axis);
                } else if constexpr (std::is_same_v<T, Normal>) {
                    return (node.sign / norm_reg(grad, delta.value)) * grad;
                } else if constexpr (std::is_same_v<T, Composite>) {
                    return node.advective->eval(x, t, grad, delta) +
                           (node.normal_coeff / norm_reg(grad, delta.value)) * grad;
                } else {
                    return piece_at(node, t).eval(x, t, grad, delta);
                }
            },
            node_);
    }

    /// True when the field (or any active piece) involves the gradient.
    bool needs_gradient() const {
        return std::visit(
            [](const auto& node) -> bool {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Normal> || std::is_same_v<T, Composite>) {
                    return true;
                } else if constexpr (std::is_same_v<T, PiecewiseInTime>) {
                    for (const auto& [end, f] : node.pieces)
                        if (f.needs_gradient()) return true;
                    return false;
                } else {
                    return false;
                }
            },
            node_);
    }

private:
    /// Piece lookup over intervals [prev_end, end); the very last end time is
    /// inclusive. Outside [0, last end] is an error.
    static const VelocityField& piece_at(const PiecewiseInTime& pw, double t) {
        if (t < 0.0 || pw.pieces.empty() || t > pw.pieces.back().first)
            throw std::out_of_range("VelocityField: time outside the piecewise schedule");
        for (const auto& [end, field] : pw.pieces)
            if (t < end) return field;
        return pw.pieces.back().second;
    }

    std::variant<Constant, Rotation, Normal, Composite, PiecewiseInTime> node_;
};

}  // namespace pmls
