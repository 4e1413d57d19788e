#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pmls/mesh_gen.hpp"
#include "pmls/mesh_io.hpp"
#include "pmls/metrics.hpp"
#include "pmls/scenarios.hpp"
#include "pmls/timeloop.hpp"
#include "pmls/vtk_io.hpp"

namespace pmls {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
inline std::string fmt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

inline const char* bc_name(BcKind bc) {
    switch (bc) {
        case BcKind::Eikonal: return "eikonal";
        case BcKind::Dirichlet: return "dirichlet";
        case BcKind::ZeroNeumann: return "znbc";
        case BcKind::LinearExtension: return "lebc";
    }
    return "?";
}

inline BcKind parse_bc(const std::string& s) {
    if (s == "eikonal" || s == "ekbc") return BcKind::Eikonal;
    if (s == "dirichlet" || s == "dbc") return BcKind::Dirichlet;
    if (s == "znbc" || s == "zero-neumann") return BcKind::ZeroNeumann;
    if (s == "lebc" || s == "linear-extension") return BcKind::LinearExtension;
    throw std::invalid_argument("unknown boundary condition '" + s +
                                "' (use eikonal|dirichlet|znbc|lebc)");
}

/// Everything a run needs; flat key=value config files use the same field
/// names. Mesh levels follow n = 16 * 2^(M-1) with dt = 0.1 / 2^(M-1)
/// unless a custom mesh file or dt is given.
struct RunConfig {
    std::string case_name = "TS";
    BcKind bc = BcKind::Eikonal;
    std::vector<int> levels = {1};
    std::string mesh_file;        ///< when set: single run on this mesh (levels must be {M})
    double perturbation = 0.0;
    std::uint64_t seed = 0;
    double dt = 0.0;              ///< 0: level schedule 0.1 / 2^(M-1)
    std::string out_dir = "out";
    double eta = 1e-12;
    int k_max = 50;
    double linear_tol = 1e-13;
    int snapshot_stride = 0;
    AxisBox domain{{-1.25, -1.25, -1.25}, {1.25, 1.25, 1.25}};
    SystemObserver observer;      ///< optional hook, not serialized

    int cells_per_axis(int level) const { return 16 << (level - 1); }
    double dt_for(int level) const { return dt > 0.0 ? dt : 0.1 / static_cast<double>(1 << (level - 1)); }
};

struct LevelResult {
    int level = 0;
    int n_cells = 0;
    CharacteristicLengths h;
    CflStats cfl;
    ErrorReport errors;
    int steps = 0;
    int total_outer_iterations = 0;
    int max_outer_iterations = 0;
    bool all_converged = true;
    int degenerate_rows = 0;
    double wall_seconds = 0.0;
};

struct RunManifest {
    RunConfig config;
    std::vector<LevelResult> levels;
    std::string errors_csv_path;
};

inline const char* kErrorsCsvHeader =
    "case,bc,M,h_ave,E1z,Einfz,Ev,E1,E1g,EOC_E1z,EOC_Einfz,EOC_Ev,EOC_E1,EOC_E1g,e1,einf,ev\n";

namespace detail {

inline Mesh make_level_mesh(const RunConfig& config, int level) {
    if (!config.mesh_file.empty()) {
        std::ifstream in(config.mesh_file);
        if (!in) throw std::runtime_error("cannot open mesh file '" + config.mesh_file + "'");
        return read_polymesh(in);
    }
    return build_hex_mesh(config.domain, config.cells_per_axis(level), config.perturbation,
                          config.seed);
}

inline TimeLoopConfig make_loop_config(const RunConfig& config, const TestCase& tc, int level) {
    TimeLoopConfig loop;
    loop.dt = config.dt_for(level);
    loop.T = tc.final_time;
    loop.velocity = tc.velocity;
    loop.eta = config.eta;
    loop.k_max = config.k_max;
    loop.linear_tol = config.linear_tol;
    loop.snapshot_stride = config.snapshot_stride;
    loop.observer = config.observer;
    switch (config.bc) {
        case BcKind::Eikonal: loop.bc = BoundaryMode::eikonal(); break;
        case BcKind::ZeroNeumann: loop.bc = BoundaryMode::zero_neumann(); break;
        case BcKind::LinearExtension: loop.bc = BoundaryMode::linear_extension(); break;
        case BcKind::Dirichlet: loop.bc = BoundaryMode::dirichlet_bc(dirichlet_evaluator(tc)); break;
    }
    return loop;
}

/// One CSV row; EOC cells are filled later once the next level exists.
struct CsvRow {
    std::string case_name, bc;
    int level;
    double h_ave;
    ErrorReport errors;
};

inline void write_errors_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << kErrorsCsvHeader;
    auto eoc_cell = [&](const std::vector<CsvRow>& rows, std::size_t i,
                        std::optional<double> ErrorReport::*field) -> std::string {
        if (i + 1 >= rows.size()) return {};
        const CsvRow& a = rows[i];
        const CsvRow& b = rows[i + 1];
        if (a.case_name != b.case_name || a.bc != b.bc || b.level != a.level + 1) return {};
        const auto& ea = a.errors.*field;
        const auto& eb = b.errors.*field;
        if (!ea || !eb || *ea <= 0.0 || *eb <= 0.0) return {};
        return fmt17(std::log(*eb / *ea) / std::log(b.h_ave / a.h_ave));
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const CsvRow& r = rows[i];
        out << r.case_name << ',' << r.bc << ',' << r.level << ',' << fmt17(r.h_ave) << ','
            << fmt17(r.errors.E1z) << ',' << fmt17(r.errors.Einfz) << ',' << fmt17(r.errors.Ev)
            << ',' << fmt17(r.errors.E1) << ',' << fmt17(r.errors.E1g) << ','
            << eoc_cell(rows, i, &ErrorReport::E1z) << ',' << eoc_cell(rows, i, &ErrorReport::Einfz)
            << ',' << eoc_cell(rows, i, &ErrorReport::Ev) << ',' << eoc_cell(rows, i, &ErrorReport::E1)
            << ',' << eoc_cell(rows, i, &ErrorReport::E1g) << ',' << fmt17(r.errors.e1) << ','
            << fmt17(r.errors.einf) << ',' << fmt17(r.errors.ev) << '\n';
    }
}

inline void append_manifest_lines(std::ostream& out, const RunConfig& config,
                                  const std::vector<LevelResult>& levels) {
    out << "case = " << config.case_name << '\n';
    out << "bc = " << bc_name(config.bc) << '\n';
    out << "mesh = " << (config.mesh_file.empty() ? "generated" : config.mesh_file) << '\n';
    out << "perturbation = " << fmt17(config.perturbation) << '\n';
    out << "seed = " << config.seed << '\n';
    out << "eta = " << fmt17(config.eta) << '\n';
    out << "k_max = " << config.k_max << '\n';
    out << "linear_tol = " << fmt17(config.linear_tol) << '\n';
    for (const LevelResult& lr : levels) {
        const std::string p = "level." + std::to_string(lr.level) + ".";
        out << p << "cells = " << lr.n_cells << '\n';
        out << p << "h_min = " << fmt17(lr.h.h_min) << '\n';
        out << p << "h_ave = " << fmt17(lr.h.h_ave) << '\n';
        out << p << "h_max = " << fmt17(lr.h.h_max) << '\n';
        out << p << "cfl_min = " << fmt17(lr.cfl.min) << '\n';
        out << p << "cfl_ave = " << fmt17(lr.cfl.ave) << '\n';
        out << p << "cfl_max = " << fmt17(lr.cfl.max) << '\n';
        out << p << "steps = " << lr.steps << '\n';
        out << p << "outer_iterations_total = " << lr.total_outer_iterations << '\n';
        out << p << "outer_iterations_max = " << lr.max_outer_iterations << '\n';
        out << p << "all_converged = " << (lr.all_converged ? "true" : "false") << '\n';
        out << p << "degenerate_rows = " << lr.degenerate_rows << '\n';
        out << p << "wall_seconds = " << fmt17(lr.wall_seconds) << '\n';
    }
}

inline void write_manifest(const std::string& path, const RunConfig& config,
                           const std::vector<LevelResult>& levels) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << "pmls-manifest 1\n";
        append_manifest_lines(out, config, levels);
    }
    std::filesystem::rename(tmp, path);  // atomic publish
}

/// Equidistant isosurface family u = 0.25 (l - 2), clipped to the field range.
inline void write_equidistant_isosurfaces(const std::string& path, const Mesh& mesh,
                                          const CellField& u, const ReconstructionCache& cache) {
    double lo = u.values[0], hi = u.values[0];
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<std::array<Vec3, 3>> tris;
    for (int l = 1;; ++l) {
        const double level = 0.25 * (l - 2);
        if (level > hi) break;
        if (level < lo) continue;
        auto shell = extract_isosurface(mesh, cache_values(u, cache), level);
        tris.insert(tris.end(), shell.begin(), shell.end());
    }
    write_vtk_triangles(path, tris, "equidistant isosurfaces");
}

}  // namespace detail

/// Run one case over the configured mesh levels; writes errors.csv, VTK
/// snapshots, the equidistant isosurfaces at the final time, and a manifest.
inline RunManifest run_case(const RunConfig& config) {
    const TestCase tc = make_test_case(config.case_name);
    if (config.bc == BcKind::Dirichlet && !tc.has_exact())
        throw std::invalid_argument("case '" + config.case_name +
                                    "' has no exact solution for a Dirichlet run");
    std::filesystem::create_directories(config.out_dir);

    RunManifest manifest;
    manifest.config = config;
    std::vector<detail::CsvRow> rows;

    for (int level : config.levels) {
        const auto t0 = std::chrono::steady_clock::now();
        Mesh mesh = detail::make_level_mesh(config, level);
        TimeLoopConfig loop = detail::make_loop_config(config, tc, level);
        CellField u0 = initial_field(tc, mesh);

        // CFL statistics at t = 0 from the initial representative gradients.
        ReconstructionCache cache0 = build_cache(mesh, u0, StencilKind::LocalOnly);
        CflStats cfl = cfl_stats(mesh, loop.velocity, loop.dt, 0.0,
                                 cache0.representative_gradients, loop.delta);

        Trajectory traj = time_loop(mesh, u0, loop);

        ExactField exact;
        const ExactField* exact_ptr = nullptr;
        if (tc.has_exact()) {
            exact = [tc](const Vec3& x, double t) { return exact_solution(tc, x, t); };
            exact_ptr = &exact;
        }
        ErrorReport errors = error_metrics(mesh, traj, loop.dt, loop.T, exact_ptr);

        LevelResult lr;
        lr.level = level;
        lr.n_cells = mesh.n_cells();
        lr.h = characteristic_lengths(mesh);
        lr.cfl = cfl;
        lr.errors = errors;
        lr.steps = static_cast<int>(traj.reports.size());
        for (const SolveReport& r : traj.reports) {
            lr.total_outer_iterations += r.K;
            lr.max_outer_iterations = std::max(lr.max_outer_iterations, r.K);
            lr.all_converged = lr.all_converged && r.converged;
            lr.degenerate_rows += r.degenerate_rows;
        }

        const std::string tag = config.case_name + "_" + bc_name(config.bc) + "_M" +
                                std::to_string(level);
        const CellField& uT = traj.states.back();
        ReconstructionCache cacheT = reconstruct_stages(mesh, uT, StencilKind::LocalOnly);
        write_vtk_cell_field(config.out_dir + "/" + tag + "_final.vtk", mesh, uT, &cacheT);
        detail::write_equidistant_isosurfaces(config.out_dir + "/" + tag + "_iso.vtk", mesh, uT,
                                              cacheT);
        if (config.snapshot_stride > 0) {
            for (std::size_t n = 0; n < traj.states.size(); n += config.snapshot_stride) {
                write_vtk_cell_field(config.out_dir + "/" + tag + "_step" + std::to_string(n) +
                                         ".vtk",
                                     mesh, traj.states[n]);
            }
        }

        lr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest.levels.push_back(lr);
        rows.push_back({config.case_name, bc_name(config.bc), level, lr.h.h_ave, errors});
    }

    manifest.errors_csv_path = config.out_dir + "/errors.csv";
    detail::write_errors_csv(manifest.errors_csv_path, rows);
    detail::write_manifest(config.out_dir + "/manifest.txt", config, manifest.levels);
    return manifest;
}

/// Boundary-condition comparison on identical meshes and time steps: one
/// errors.csv block per mode. A failing mode is reported and skipped.
inline std::vector<RunManifest> compare_bcs(const RunConfig& base, const std::vector<BcKind>& modes,
                                            std::string* failures = nullptr) {
    if (modes.size() < 2 && failures)
        *failures += "warning: single-mode comparison is degenerate\n";
    std::filesystem::create_directories(base.out_dir);
    std::vector<RunManifest> manifests;
    std::vector<detail::CsvRow> rows;
    for (BcKind bc : modes) {
        RunConfig config = base;
        config.bc = bc;
        config.out_dir = base.out_dir + "/" + bc_name(bc);
        try {
            RunManifest m = run_case(config);
            for (std::size_t i = 0; i < m.levels.size(); ++i)
                rows.push_back({config.case_name, bc_name(bc), m.levels[i].level,
                                m.levels[i].h.h_ave, m.levels[i].errors});
            manifests.push_back(std::move(m));
        } catch (const std::exception& e) {
            if (failures) *failures += std::string(bc_name(bc)) + ": " + e.what() + "\n";
        }
    }
    detail::write_errors_csv(base.out_dir + "/errors.csv", rows);
    return manifests;
}

}  // namespace pmls
