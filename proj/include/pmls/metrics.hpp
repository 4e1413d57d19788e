#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "pmls/isosurface.hpp"
#include "pmls/timeloop.hpp"

namespace pmls {

using ExactField = std::function<double(const Vec3&, double)>;

/// Cells containing the zero level of the exact solution at time t: the
/// vertex samples of the cell straddle zero. Throws when the band is empty.
inline std::vector<int> zero_band(const Mesh& mesh, const ExactField& exact, double t) {
    std::vector<double> vert(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) vert[v] = exact(mesh.vertices[v], t);
    std::vector<int> band;
    for (int p = 0; p < mesh.n_cells(); ++p) {
        double lo = vert[mesh.cells[p].vertices.front()];
        double hi = lo;
        for (int v : mesh.cells[p].vertices) {
            lo = std::min(lo, vert[v]);
            hi = std::max(hi, vert[v]);
        }
        if (lo <= 0.0 && hi >= 0.0) band.push_back(p);
    }
    if (band.empty()) throw std::domain_error("zero_band: no cell contains the zero level set");
    return band;
}

/// Accumulated error measures of one run. Band metrics are present only when
/// an exact solution is available and its zero band is nonempty at every
/// step; the return-to-initial metrics e1/einf/ev are filled for runs
/// without an exact solution.
struct ErrorReport {
    std::optional<double> E1z, Einfz, Ev, E1, E1g;
    std::optional<double> e1, einf, ev;
    std::vector<double> volume_trace;  ///< V({u^n < 0}) per step
};

/// Implements the time-accumulated sums over every step n = 1..N. The
/// zero-level band is recomputed per step and each step's band average is
/// weighted by dt/T. E1g measures | |grad u| - 1 | through the local-stencil
/// least-squares cell gradient of the numerical field. Enclosed volumes come
/// from marching tetrahedra with reconstructed tet-corner values, for the
/// numerical and the exact field alike.
inline ErrorReport error_metrics(const Mesh& mesh, const Trajectory& traj, double dt, double T,
                                 const ExactField* exact) {
    const int N = static_cast<int>(traj.states.size()) - 1;
    if (N < 1) throw std::invalid_argument("error_metrics: trajectory holds no steps");

    double total_volume = 0.0;
    for (const Cell& c : mesh.cells) total_volume += c.volume;

    ErrorReport rep;
    double e1z = 0.0, einfz = 0.0, ev = 0.0, e1 = 0.0, e1g = 0.0;
    bool band_ok = exact != nullptr;

    for (int n = 1; n <= N; ++n) {
        const CellField& u = traj.states[n];
        const double t = u.time;

        ReconstructionCache cache = reconstruct_stages(mesh, u, StencilKind::LocalOnly);
        for (int p = 0; p < mesh.n_cells(); ++p)
            e1g += std::abs(norm(cache.cell_gradients[p]) - 1.0) * mesh.cells[p].volume;
        const double vol_num = enclosed_volume(mesh, cache_values(u, cache));
        rep.volume_trace.push_back(vol_num);

        if (exact) {
            double sum_abs = 0.0;
            for (int p = 0; p < mesh.n_cells(); ++p)
                sum_abs += std::abs(u.values[p] - (*exact)(mesh.cells[p].center, t)) *
                           mesh.cells[p].volume;
            e1 += sum_abs;

            if (band_ok) {
                try {
                    std::vector<int> band = zero_band(mesh, *exact, t);
                    double band_sum = 0.0, band_vol = 0.0;
                    for (int p : band) {
                        const double diff = std::abs(u.values[p] - (*exact)(mesh.cells[p].center, t));
                        band_sum += diff * mesh.cells[p].volume;
                        band_vol += mesh.cells[p].volume;
                        einfz = std::max(einfz, diff);
                    }
                    e1z += band_sum / band_vol;
                } catch (const std::domain_error&) {
                    band_ok = false;  // band metrics undefined for this run
                }
            }

            // The exact field is run through the same cell-sampling and
            // reconstruction pipeline so the extraction bias cancels.
            CellField ue;
            ue.time = t;
            ue.values.resize(mesh.cells.size());
            for (int p = 0; p < mesh.n_cells(); ++p) ue.values[p] = (*exact)(mesh.cells[p].center, t);
            ReconstructionCache ce = reconstruct_stages(mesh, ue, StencilKind::LocalOnly);
            const double vol_exact = enclosed_volume(mesh, cache_values(ue, ce));
            ev += std::abs(vol_num - vol_exact);
        }
    }

    rep.E1g = e1g * dt / (T * total_volume);
    if (exact) {
        rep.E1 = e1 * dt / (T * total_volume);
        rep.Ev = ev / N;
        if (band_ok) {
            rep.E1z = e1z * dt / T;
            rep.Einfz = einfz;
        }
    } else {
        // Return-to-initial metrics against the sampled initial field.
        const CellField& u0 = traj.states.front();
        const CellField& uT = traj.states.back();
        double sum = 0.0, mx = 0.0;
        for (int p = 0; p < mesh.n_cells(); ++p) {
            const double diff = std::abs(uT.values[p] - u0.values[p]);
            sum += diff * mesh.cells[p].volume;
            mx = std::max(mx, diff);
        }
        rep.e1 = sum / total_volume;
        rep.einf = mx;
        ReconstructionCache cache0 = reconstruct_stages(mesh, u0, StencilKind::LocalOnly);
        const double vol0 = enclosed_volume(mesh, cache_values(u0, cache0));
        double vdiff = 0.0;
        for (double v : rep.volume_trace) vdiff += std::abs(v - vol0);
        rep.ev = vdiff / N;
    }
    return rep;
}

/// Experimental order of convergence between consecutive mesh levels:
/// log(E_{M+1}/E_M) / log(h_{M+1}/h_M). Undefined for non-positive errors.
inline std::vector<std::optional<double>> eoc(const std::vector<double>& errors,
                                              const std::vector<double>& h_ave) {
    if (errors.size() != h_ave.size() || errors.size() < 2)
        throw std::invalid_argument("eoc: need matching error/h lists with at least two levels");
    std::vector<std::optional<double>> out;
    for (std::size_t m = 0; m + 1 < errors.size(); ++m) {
        if (errors[m] <= 0.0 || errors[m + 1] <= 0.0) {
            out.push_back(std::nullopt);
        } else {
            out.push_back(std::log(errors[m + 1] / errors[m]) / std::log(h_ave[m + 1] / h_ave[m]));
        }
    }
    return out;
}

struct CflStats {
    double min = 0.0, ave = 0.0, max = 0.0;
};

/// |v(x_p)| dt / |Omega_p|_B^(1/3), reduced over cells. Normal velocity
/// components are evaluated with the representative cell gradients.
inline CflStats cfl_stats(const Mesh& mesh, const VelocityField& velocity, double dt, double t,
                          const std::vector<Vec3>& representative_gradients, const Delta& delta) {
    CflStats s;
    s.min = std::numeric_limits<double>::max();
    double sum = 0.0;
    for (int p = 0; p < mesh.n_cells(); ++p) {
        const Vec3 v = velocity.eval(mesh.cells[p].center, t, representative_gradients[p], delta);
        const double cfl = norm(v) * dt / std::cbrt(mesh.cells[p].bbox_volume);
        s.min = std::min(s.min, cfl);
        s.max = std::max(s.max, cfl);
        sum += cfl;
    }
    s.ave = sum / mesh.n_cells();
    return s;
}

}  // namespace pmls
