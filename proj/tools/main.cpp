#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pmls/runner.hpp"

using namespace pmls;

namespace {

// "1", "1,3", "1..3"
std::vector<int> parse_levels(const std::string& spec) {
    std::vector<int> levels;
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const int a = std::stoi(spec.substr(0, dots));
        const int b = std::stoi(spec.substr(dots + 2));
        for (int m = a; m <= b; ++m) levels.push_back(m);
    } else {
        std::istringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) levels.push_back(std::stoi(tok));
    }
    if (levels.empty()) throw CLI::ValidationError("--levels", "empty level list");
    for (int m : levels)
        if (m < 1 || m > 6) throw CLI::ValidationError("--levels", "levels must be in 1..6");
    return levels;
}

std::vector<BcKind> parse_bc_list(const std::string& spec) {
    std::vector<BcKind> modes;
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) modes.push_back(parse_bc(tok));
    return modes;
}

// Flat key=value config file with a schema header; CLI flags override.
void load_config_file(const std::string& path, std::map<std::string, std::string>& kv) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        if (!header) {
            std::string tag;
            int version = 0;
            if (!(ss >> tag)) continue;  // blank line before header
            if (tag != "pmls-config" || !(ss >> version) || version != 1)
                throw CLI::ValidationError("--config", "first line must be 'pmls-config 1'");
            header = true;
            continue;
        }
        std::string key, eq, value;
        if (!(ss >> key)) continue;
        if (!(ss >> eq >> value) || eq != "=")
            throw CLI::ValidationError("--config",
                                       "line " + std::to_string(lineno) + ": expected 'key = value'");
        kv[key] = value;
    }
}

void apply_config_map(const std::map<std::string, std::string>& kv, RunConfig& config,
                      std::string& levels_spec) {
    for (const auto& [key, value] : kv) {
        if (key == "case") config.case_name = value;
        else if (key == "bc") config.bc = parse_bc(value);
        else if (key == "levels") levels_spec = value;
        else if (key == "dt") config.dt = std::stod(value);
        else if (key == "mesh") config.mesh_file = value;
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "out") config.out_dir = value;
        else if (key == "eta") config.eta = std::stod(value);
        else if (key == "kmax") config.k_max = std::stoi(value);
        else if (key == "linear_tol") config.linear_tol = std::stod(value);
        else if (key == "perturbation") config.perturbation = std::stod(value);
        else if (key == "stride") config.snapshot_stride = std::stoi(value);
        else throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    }
}

void add_run_options(CLI::App* cmd, RunConfig& config, std::string& levels_spec,
                     std::string& bc_spec, std::string& config_file) {
    cmd->add_option("--config", config_file, "key=value config file (flags override)");
    cmd->add_option("--case", config.case_name, "test case name")->envname("PMLS_CASE");
    cmd->add_option("--bc", bc_spec, "boundary condition: eikonal|dirichlet|znbc|lebc")
        ->envname("PMLS_BC");
    cmd->add_option("--levels", levels_spec, "mesh levels, e.g. 1, 1..3 or 1,3")
        ->envname("PMLS_LEVELS");
    cmd->add_option("--dt", config.dt, "time step override (default 0.1/2^(M-1))")
        ->envname("PMLS_DT");
    cmd->add_option("--mesh", config.mesh_file, "polymesh file instead of generated meshes")
        ->envname("PMLS_MESH");
    cmd->add_option("--seed", config.seed, "mesh perturbation seed")->envname("PMLS_SEED");
    cmd->add_option("--perturb", config.perturbation, "vertex perturbation in [0,0.3)")
        ->envname("PMLS_PERTURB");
    cmd->add_option("--out", config.out_dir, "output directory")->envname("PMLS_OUT");
    cmd->add_option("--eta", config.eta, "deferred-correction stopping bound")->envname("PMLS_ETA");
    cmd->add_option("--kmax", config.k_max, "outer iteration guard")->envname("PMLS_KMAX");
    cmd->add_option("--stride", config.snapshot_stride, "VTK snapshot stride (0 = final only)")
        ->envname("PMLS_STRIDE");
}

void print_summary(const RunManifest& manifest) {
    for (const LevelResult& lr : manifest.levels) {
        std::cout << manifest.config.case_name << " " << bc_name(manifest.config.bc) << " M"
                  << lr.level << ": cells=" << lr.n_cells << " h_ave=" << lr.h.h_ave;
        if (lr.errors.E1) std::cout << " E1=" << *lr.errors.E1;
        if (lr.errors.E1z) std::cout << " E1z=" << *lr.errors.E1z;
        if (lr.errors.E1g) std::cout << " E1g=" << *lr.errors.E1g;
        if (lr.errors.e1) std::cout << " e1=" << *lr.errors.e1;
        std::cout << " K_max=" << lr.max_outer_iterations
                  << (lr.all_converged ? "" : " [NOT CONVERGED]") << " (" << lr.wall_seconds
                  << " s)\n";
    }
    std::cout << "errors table: " << manifest.errors_csv_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cell-centered finite volume level-set solver on polyhedral meshes"};
    app.require_subcommand(1);

    RunConfig config;
    std::string levels_spec = "1";
    std::string bc_spec = "eikonal";
    std::string config_file;
    std::string cases_spec = "TS";

    CLI::App* run = app.add_subcommand("run", "run one test case over mesh levels");
    add_run_options(run, config, levels_spec, bc_spec, config_file);

    CLI::App* compare = app.add_subcommand("compare", "run one case under several boundary conditions");
    add_run_options(compare, config, levels_spec, bc_spec, config_file);

    CLI::App* sweep = app.add_subcommand("sweep", "run several cases into one table");
    add_run_options(sweep, config, levels_spec, bc_spec, config_file);
    sweep->add_option("--cases", cases_spec, "comma-separated case names");

    CLI::App* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
    CLI::App* mesh_gen = mesh_cmd->add_subcommand("gen", "generate a hex mesh file");
    int gen_n = 16;
    double gen_perturb = 0.0, box_min = -1.25, box_max = 1.25;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "mesh.txt";
    mesh_gen->add_option("--n", gen_n, "cells per axis")->required();
    mesh_gen->add_option("--perturb", gen_perturb, "vertex perturbation in [0,0.3)");
    mesh_gen->add_option("--seed", gen_seed, "perturbation seed");
    mesh_gen->add_option("--box-min", box_min, "domain lower corner (cubic)");
    mesh_gen->add_option("--box-max", box_max, "domain upper corner (cubic)");
    mesh_gen->add_option("--out", gen_out, "output file");

    CLI::App* mesh_check = mesh_cmd->add_subcommand("check", "validate a polymesh file");
    std::string check_path;
    mesh_check->add_option("--mesh", check_path, "polymesh file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        if (app.got_subcommand(run) || app.got_subcommand(sweep) || app.got_subcommand(compare)) {
            std::cerr << "valid cases:";
            for (const auto& name : test_case_names()) std::cerr << ' ' << name;
            std::cerr << "\n";
        }
        return 2;
    }

    try {
        if (!config_file.empty()) {
            std::map<std::string, std::string> kv;
            load_config_file(config_file, kv);
            RunConfig from_file;
            std::string file_levels = levels_spec;
            apply_config_map(kv, from_file, file_levels);
            // Flags override file values: re-apply only options the user set.
            CLI::App* active = app.got_subcommand(run) ? run
                               : app.got_subcommand(compare) ? compare
                                                             : sweep;
            auto keep = [&](const char* flag) { return active->count(flag) > 0; };
            if (!keep("--case")) config.case_name = from_file.case_name;
            if (!keep("--bc")) config.bc = from_file.bc;
            if (!keep("--levels")) levels_spec = file_levels;
            if (!keep("--dt")) config.dt = from_file.dt;
            if (!keep("--mesh")) config.mesh_file = from_file.mesh_file;
            if (!keep("--seed")) config.seed = from_file.seed;
            if (!keep("--out")) config.out_dir = from_file.out_dir;
            if (!keep("--eta")) config.eta = from_file.eta;
            if (!keep("--kmax")) config.k_max = from_file.k_max;
            if (!keep("--perturb")) config.perturbation = from_file.perturbation;
            if (!keep("--stride")) config.snapshot_stride = from_file.snapshot_stride;
        }

        if (app.got_subcommand(mesh_gen)) {
            Mesh mesh = build_hex_mesh({{box_min, box_min, box_min}, {box_max, box_max, box_max}},
                                       gen_n, gen_perturb, gen_seed);
            std::ofstream out(gen_out);
            if (!out) throw std::runtime_error("cannot open '" + gen_out + "'");
            write_polymesh(out, mesh);
            auto h = characteristic_lengths(mesh);
            std::cout << "wrote " << gen_out << ": " << mesh.n_cells() << " cells, h_ave=" << h.h_ave
                      << "\n";
            return 0;
        }
        if (app.got_subcommand(mesh_check)) {
            std::ifstream in(check_path);
            if (!in) throw std::runtime_error("cannot open '" + check_path + "'");
            Mesh mesh = read_polymesh(in);
            auto h = characteristic_lengths(mesh);
            double vol = 0.0;
            for (const Cell& c : mesh.cells) vol += c.volume;
            std::cout << "cells = " << mesh.n_cells() << "\n"
                      << "boundary cells = " << mesh.boundary_cells.size() << "\n"
                      << "triangles = " << mesh.triangles.size() << "\n"
                      << "h_min/ave/max = " << h.h_min << " " << h.h_ave << " " << h.h_max << "\n"
                      << "total volume = " << vol << "\n";
            return 0;
        }

        // Validate case and bc before running anything.
        config.levels = parse_levels(levels_spec);
        const auto names = test_case_names();
        if (std::find(names.begin(), names.end(), config.case_name) == names.end()) {
            std::cerr << "error: unknown case '" << config.case_name << "'\nvalid cases:";
            for (const auto& n : names) std::cerr << ' ' << n;
            std::cerr << "\n";
            return 2;
        }

        if (app.got_subcommand(run)) {
            config.bc = parse_bc(bc_spec);
            print_summary(run_case(config));
        } else if (app.got_subcommand(compare)) {
            std::vector<BcKind> modes = parse_bc_list(bc_spec);
            std::string failures;
            auto manifests = compare_bcs(config, modes, &failures);
            for (const RunManifest& m : manifests) print_summary(m);
            if (!failures.empty()) std::cerr << failures;
            std::cout << "comparison table: " << config.out_dir << "/errors.csv\n";
            if (manifests.size() != modes.size()) return 1;
        } else if (app.got_subcommand(sweep)) {
            config.bc = parse_bc(bc_spec);
            std::istringstream ss(cases_spec);
            std::string name;
            const std::string base_out = config.out_dir;
            std::vector<std::string> all_csv;
            while (std::getline(ss, name, ',')) {
                RunConfig c = config;
                c.case_name = name;
                c.out_dir = base_out + "/" + name;
                print_summary(run_case(c));
                all_csv.push_back(c.out_dir + "/errors.csv");
            }
            // Concatenate the per-case tables into one sweep table.
            std::ofstream out(base_out + "/errors.csv");
            out << kErrorsCsvHeader;
            for (const std::string& path : all_csv) {
                std::ifstream in(path);
                std::string line;
                std::getline(in, line);  // skip header
                while (std::getline(in, line)) out << line << '\n';
            }
            std::cout << "sweep table: " << base_out << "/errors.csv\n";
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
