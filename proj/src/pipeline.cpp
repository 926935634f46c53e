#include "membrane/pipeline.hpp"

#include "membrane/strings.hpp"
#include "membrane/vault.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace membrane {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string out_dir(const ProblemConfig& cfg, const RunOptions& opts)
{
    return opts.out_dir.empty() ? cfg.out_dir : opts.out_dir;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream os(p, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write " + p.string());
    return os;
}

void write_json(const fs::path& p, const json& j)
{
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

json report_json(const OptimalityReport& r)
{
    json j;
    j["cond_i"] = r.cond_i;
    j["cond_ii"] = r.cond_ii;
    j["cond_iii_r0"] = r.cond_iii_r0;
    j["cond_iii_tau33"] = r.cond_iii_tau33;
    j["equi_repartition"] = r.equi_repartition;
    j["value_gap"] = r.value_gap;
    j["rel_gap"] = r.rel_gap;
    j["worst_element"] = r.worst_element;
    j["membership_failures"] = r.membership_failures;
    j["max_rho_plus"] = r.max_rho_plus;
    j["u_inf"] = r.u_inf;
    j["w_inf"] = r.w_inf;
    j["u_bound_ok"] = r.u_bound_ok;
    j["w_bound_ok"] = r.w_bound_ok;
    j["min_sigma_eig"] = r.min_sigma_eig;
    if (r.two_point_checked) {
        j["two_point_pairs"] = r.two_point_pairs;
        j["two_point_max_excess"] = r.two_point_max_excess;
    }
    return j;
}

bool report_passes(const OptimalityReport& r, double Z, double a)
{
    const double tol = 1e-6 * Z;
    bool ok = r.max_residual() <= tol && r.membership_failures == 0;
    if (r.two_point_checked)
        ok = ok && r.two_point_max_excess <= 1e-9 * a * a;
    return ok;
}

json material_json(const ProblemConfig& cfg)
{
    json m;
    m["E"] = cfg.E;
    if (cfg.michell())
        m["nu"] = "michell";
    else
        m["nu"] = cfg.nu;
    return m;
}

std::ostream* open_log(const RunOptions& opts, std::ofstream& holder)
{
    if (opts.log_path.empty())
        return nullptr;
    holder.open(opts.log_path);
    if (!holder)
        throw std::runtime_error("cannot write log " + opts.log_path);
    return &holder;
}

json solve_summary(const ProblemConfig& cfg, const SolveResult& r)
{
    json j;
    j["status"] = to_string(r.sol.status);
    j["message"] = r.sol.message;
    j["iterations"] = r.sol.iterations;
    j["Z_h"] = r.fem.Z_h;
    const double F = load_scale(cfg);
    j["Z_normalized"] = F > 0.0 ? r.fem.Z_h * std::pow(cfg.E, 0.25) / (F * cfg.a) : 0.0;
    j["Z_load"] = r.fem.Z_load;
    j["C_min"] = r.has_design ? r.design.C_min : 0.0;
    j["mass"] = r.has_design ? r.design.mass : 0.0;
    j["V0"] = cfg.V0;
    j["rel_gap"] = r.sol.rel_gap;
    j["objective_gap"] = r.fem.rel_gap;
    j["primal_res"] = r.sol.primal_res;
    j["dual_res"] = r.sol.dual_res;
    j["feasibility_scale"] = r.fem.feasibility_scale;
    j["energy_balance"] = r.fem.energy_balance;
    j["max_residuals"] = report_json(r.report);
    j["verification_passed"] = report_passes(r.report, r.fem.Z_h, cfg.a);
    j["mesh"] = {{"n", cfg.n},
                 {"pattern", to_string(cfg.pattern)},
                 {"elements", r.mesh.num_elements()},
                 {"interior_nodes", r.mesh.num_interior()}};
    j["material"] = material_json(cfg);
    j["trim_b0"] = r.has_design ? r.design.b0 : 0.0;
    j["warnings"] = r.warnings;
    j["seconds"] = r.seconds;
    j["config"] = json::parse(cfg.source);
    return j;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);   // header
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace

Materiald make_material(const ProblemConfig& cfg)
{
    return cfg.michell() ? build_michell(cfg.E) : build_material(cfg.E, cfg.nu);
}

Mesh make_mesh(const ProblemConfig& cfg)
{
    return build_mesh(cfg.a, cfg.n, cfg.pattern, cfg.shape);
}

SolveResult solve_problem(const ProblemConfig& cfg, std::ostream* log)
{
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult r;
    r.mesh = make_mesh(cfg);
    r.mat = make_material(cfg);
    r.f = nodal_load_vector(r.mesh, cfg.loads, &r.warnings);
    r.assembled = assemble_dual_program(r.mesh, r.mat, r.f, cfg.V0);
    if (r.assembled.infeasible) {
        r.sol.status = SolveStatus::Infeasible;
        r.sol.message = "load on a node without incident elements";
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }
    SolverOptions so = cfg.solver;
    so.log = log;
    r.sol = solve(r.assembled.program, so);
    if (r.sol.status != SolveStatus::Infeasible) {
        r.fem = recover_fields(r.assembled.program, r.sol, r.mesh, r.mat);
        r.report = verify_optimality(r.fem, r.mesh, r.mat);
        // Below the solver resolution of the natural scale F a E^(-1/4) the load is degenerate.
        const double zscale = load_scale(cfg) * cfg.a / std::pow(cfg.E, 0.25);
        const bool loaded = r.f.size() > 0 && r.f.cwiseAbs().maxCoeff() > 0.0;
        if (loaded && r.fem.Z_h > cfg.solver.gap_tol * zscale) {
            r.design = thickness(r.fem, cfg.V0);
            average_pairs(r.design, r.mesh);
            if (cfg.trim == TrimMode::Fraction)
                trim(r.design, cfg.trim_value * r.design.b0);
            else if (cfg.trim == TrimMode::Absolute)
                trim(r.design, cfg.trim_value);
            scale_optimal(r.design, r.fem, r.mat);
            r.has_design = true;
        }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

int run_solve(const ProblemConfig& cfg, const RunOptions& opts)
{
    const fs::path dir = out_dir(cfg, opts);
    fs::create_directories(dir);
    std::ofstream logf;
    std::ostream* log = open_log(opts, logf);
    SolveResult r = solve_problem(cfg, log);

    if (cfg.wants("triplets")) {
        auto os = open_out(dir / "program.txt");
        write_triplets(os, r.assembled.program);
    }
    const bool have_fields = r.sol.status != SolveStatus::Infeasible;
    if (have_fields && cfg.wants("csv")) {
        Design empty;
        auto ec = open_out(dir / "elements.csv");
        write_element_csv(ec, r.mesh, r.fem, r.has_design ? r.design : empty);
        auto nc = open_out(dir / "nodes.csv");
        write_node_csv(nc, r.mesh, r.fem);
        auto dc = open_out(dir / "dual.csv");
        write_dual_csv(dc, r.fem);
    }
    json summary = solve_summary(cfg, r);
    if (have_fields && cfg.Lambda0 && r.mat.michell() && r.has_design) {
        const auto hooke = fmd_hooke_field(r.fem, r.mat, *cfg.Lambda0);
        double trace = 0.0;
        for (const auto& h : hooke)
            trace += h.density * r.mesh.areas[h.element];
        summary["fmd_trace_integral"] = trace;
        if (cfg.wants("csv")) {
            auto hc = open_out(dir / "hooke.csv");
            hc << "elem_id,density,s_I,s_II,e_I_x,e_I_y,e_II_x,e_II_y\n";
            char buf[256];
            for (const auto& h : hooke) {
                std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", h.element, h.density,
                              h.s_I, h.s_II, h.e_I.x(), h.e_I.y(), h.e_II.x(), h.e_II.y());
                hc << buf;
            }
        }
    }
    write_json(dir / "summary.json", summary);
    std::cout << "status " << to_string(r.sol.status) << "  Z_h " << r.fem.Z_h << "  Z_normalized "
              << summary["Z_normalized"].get<double>() << "  iterations " << r.sol.iterations << "\n";
    return r.sol.status == SolveStatus::Optimal ? kExitOk : kExitFailure;
}

int run_strings(const ProblemConfig& cfg, const RunOptions& opts)
{
    const fs::path dir = out_dir(cfg, opts);
    fs::create_directories(dir);
    std::ofstream logf;
    std::ostream* log = open_log(opts, logf);
    const auto t0 = std::chrono::steady_clock::now();

    const int k = cfg.strings.grid > 0 ? cfg.strings.grid : cfg.n + 1;
    const StringGrid grid = make_grid(cfg.a, k);
    std::vector<std::string> warnings;
    const Eigen::VectorXd f = string_nodal_load(grid, cfg.loads, &warnings);
    const auto pairs = cfg.strings.candidates.empty() ? build_pairs(grid, cfg.strings.max_length)
                                                      : pairs_from_segments(grid, cfg.strings.candidates);
    const StringProgram prog = assemble_string_program(grid, pairs, f);
    SolverOptions so = cfg.solver;
    so.log = log;
    const StringSystem sys = solve_strings(grid, pairs, prog, f, cfg.V0, so);

    if (cfg.wants("csv")) {
        auto os = open_out(dir / "strings.csv");
        write_string_csv(os, grid, sys);
    }
    json j;
    j["status"] = to_string(sys.status);
    j["Z_strings"] = sys.Z_strings;
    const double F = load_scale(cfg);
    j["Z_normalized"] = F > 0.0 ? sys.Z_strings * std::pow(cfg.E, 0.25) / (F * cfg.a) : 0.0;
    j["pairs"] = pairs.size();
    j["grid"] = k;
    j["iterations"] = sys.solution.iterations;
    j["inplane_residual"] = sys.inplane_residual;
    j["transverse_residual"] = sys.transverse_residual;
    j["warnings"] = warnings;
    j["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    j["config"] = json::parse(cfg.source);
    write_json(dir / "strings_summary.json", j);
    std::cout << "status " << to_string(sys.status) << "  Z_strings " << sys.Z_strings << "  pairs " << pairs.size()
              << "\n";
    return sys.status == SolveStatus::Optimal ? kExitOk : kExitFailure;
}

int run_vault(const ProblemConfig& cfg, const RunOptions& opts)
{
    if (!cfg.michell())
        throw ConfigError("field 'material.nu': the vault pipeline needs \"michell\"");
    for (const auto& c : cfg.loads.components) {
        const bool up = std::visit(
            [](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, PointLoad>)
                    return l.P > 0.0;
                else if constexpr (std::is_same_v<T, LineLoad>)
                    return l.t > 0.0;
                else
                    return l.p > 0.0;
            },
            c);
        if (up)
            throw ConfigError("field 'loads': the vault pipeline needs nonpositive loads");
    }
    const fs::path dir = out_dir(cfg, opts);
    fs::create_directories(dir);
    std::ofstream logf;
    std::ostream* log = open_log(opts, logf);
    SolveResult r = solve_problem(cfg, log);
    json j = solve_summary(cfg, r);
    int code = r.sol.status == SolveStatus::Optimal ? kExitOk : kExitFailure;
    if (r.has_design) {
        const VaultSurface vs = lift(r.fem, r.mesh, r.mat, cfg.V0);
        const double cons = varrho_consistency(vs, r.fem, r.mat);
        const double mass_err = std::abs(vs.mass - cfg.V0) / cfg.V0;
        j["vault"] = {{"mass", vs.mass},
                      {"surface_mass", vs.surface_mass},
                      {"mass_rel_error", mass_err},
                      {"varrho_consistency", cons},
                      {"max_height", vs.max_height},
                      {"height_bound", 0.5 * r.mesh.diameter()},
                      {"conservation_passed", mass_err <= 1e-6 && cons <= 1e-8}};
        if (cfg.wants("obj") || cfg.wants("csv")) {
            auto oo = open_out(dir / "vault.obj");
            write_obj(oo, r.mesh, vs);
            auto vc = open_out(dir / "vault.csv");
            write_vault_csv(vc, vs);
        }
        if (mass_err > 1e-6 || cons > 1e-8)
            code = kExitFailure;
        std::cout << "vault mass " << vs.mass << "  V0 " << cfg.V0 << "  consistency " << cons << "\n";
    }
    write_json(dir / "vault_summary.json", j);
    return code;
}

int run_verify(const std::string& dir_s, const RunOptions& opts)
{
    const fs::path dir = dir_s;
    std::ifstream sin(dir / "summary.json");
    if (!sin)
        throw ConfigError("cannot open " + (dir / "summary.json").string());
    json summary;
    try {
        summary = json::parse(sin);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("summary.json: ") + e.what());
    }
    if (!summary.contains("config"))
        throw ConfigError("summary.json has no embedded configuration");
    const ProblemConfig cfg = parse_config(summary["config"].dump());
    const Mesh mesh = make_mesh(cfg);
    const Materiald mat = make_material(cfg);
    const Eigen::VectorXd f = nodal_load_vector(mesh, cfg.loads);

    const int m = mesh.num_interior();
    Eigen::VectorXd u1 = Eigen::VectorXd::Zero(m), u2 = u1, w = u1;
    for (const auto& row : read_csv(dir / "nodes.csv")) {
        if (row.size() != 7)
            throw ConfigError("nodes.csv: expected 7 columns");
        const int v = std::stoi(row[0]);
        if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
            throw ConfigError("nodes.csv: node id out of range");
        const int j = mesh.interior_map[v];
        if (j < 0)
            continue;
        u1(j) = std::stod(row[4]);
        u2(j) = std::stod(row[5]);
        w(j) = std::stod(row[6]);
    }
    const int ne = mesh.num_elements();
    std::vector<double> r0(ne, 0.0);
    std::vector<Sym3d> tau(ne, Sym3d::Zero());
    for (const auto& row : read_csv(dir / "dual.csv")) {
        if (row.size() != 8)
            throw ConfigError("dual.csv: expected 8 columns");
        const int e = std::stoi(row[0]);
        if (e < 0 || e >= ne)
            throw ConfigError("dual.csv: element id out of range");
        r0[e] = std::stod(row[1]);
        for (int k = 0; k < 6; ++k)
            tau[e](k) = std::stod(row[2 + k]);
    }
    FemSolution fem = fem_from_fields(mesh, mat, f, u1, u2, w, r0, tau, false);
    fem.rel_gap = summary.value("objective_gap", 0.0);
    const OptimalityReport rep = verify_optimality(fem, mesh, mat);
    const bool ok = report_passes(rep, fem.Z_h, cfg.a);

    json j;
    j["Z_h"] = fem.Z_h;
    j["Z_load"] = fem.Z_load;
    j["max_residual"] = rep.max_residual();
    j["relative_max_residual"] = fem.Z_h > 0.0 ? rep.max_residual() / fem.Z_h : rep.max_residual();
    j["residuals"] = report_json(rep);
    j["passed"] = ok;
    const fs::path target = opts.out_dir.empty() ? dir : fs::path(opts.out_dir);
    fs::create_directories(target);
    write_json(target / "verify.json", j);
    std::cout << (ok ? "verified" : "verification failed") << "  max residual " << rep.max_residual() << "  Z_h "
              << fem.Z_h << "\n";
    if (!ok && rep.worst_element >= 0)
        std::cout << "largest energy-split residual at element " << rep.worst_element << "\n";
    return ok ? kExitOk : kExitFailure;
}

int run_sweep(const ProblemConfig& cfg, const std::vector<std::string>& values, const RunOptions& opts)
{
    const fs::path dir = out_dir(cfg, opts);
    fs::create_directories(dir);
    json rows = json::array();
    int code = kExitOk;
    for (const auto& v : values) {
        ProblemConfig c = cfg;
        json src = json::parse(cfg.source);
        if (v == "michell") {
            c.nu = -1.0;
            src["material"]["nu"] = "michell";
        } else {
            try {
                size_t used = 0;
                c.nu = std::stod(v, &used);
                if (used != v.size())
                    throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw ConfigError("--sweep: cannot read Poisson ratio '" + v + "'");
            }
            if (!(c.nu >= -1.0 && c.nu < 1.0))
                throw ConfigError("--sweep: Poisson ratio '" + v + "' outside [-1, 1)");
            src["material"]["nu"] = c.nu;
        }
        c.source = src.dump();
        RunOptions o = opts;
        o.out_dir = (dir / ("nu_" + v)).string();
        if (!opts.log_path.empty())
            o.log_path = opts.log_path + "." + v;
        const int rc = run_solve(c, o);
        code = std::max(code, rc);
        std::ifstream sin(fs::path(o.out_dir) / "summary.json");
        const json s = json::parse(sin);
        rows.push_back({{"nu", v}, {"Z_h", s["Z_h"]}, {"Z_normalized", s["Z_normalized"]}, {"status", s["status"]}});
    }
    write_json(dir / "sweep.json", rows);
    return code;
}

} // namespace membrane
