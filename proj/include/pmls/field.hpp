#pragma once

#include <functional>
#include <vector>

#include "pmls/geometry.hpp"

namespace pmls {

/// One scalar unknown per cell (u at the cell centers) plus its time stamp.
struct CellField {
    std::vector<double> values;
    double time = 0.0;
};

/// Evaluates a prescribed boundary value at (x, t); used by the Dirichlet
/// boundary condition and by the Dirichlet-augmented gradient stencil.
using BoundaryEvaluator = std::function<double(const Vec3&, double)>;

}  // namespace pmls
