#include "membrane/cli.hpp"
#include "membrane/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace membrane {

namespace {

std::vector<std::string> split_values(const std::string& arg)
{
    const auto eq = arg.find('=');
    if (eq == std::string::npos || arg.substr(0, eq) != "nu")
        throw ConfigError("--sweep expects nu=v1,v2,...");
    std::vector<std::string> out;
    std::stringstream ss(arg.substr(eq + 1));
    std::string v;
    while (std::getline(ss, v, ','))
        if (!v.empty())
            out.push_back(v);
    if (out.empty())
        throw ConfigError("--sweep lists no values");
    return out;
}

} // namespace

int run_cli(int argc, const char* const* argv)
{
    CLI::App app{"Optimal membrane design by finite-element conic programming"};
    app.require_subcommand(1);

    std::string config, out, log, sweep, dir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out, "Output directory (overrides the configuration)");
        sub->add_option("--log", log, "Solver iteration log file");
    };

    auto* solve_cmd = app.add_subcommand("solve", "Solve the membrane program and write designs");
    solve_cmd->add_option("--config", config, "Problem file (JSON)")->required();
    solve_cmd->add_option("--sweep", sweep, "Poisson ratio sweep, e.g. nu=0.3,0,-0.6,michell");
    add_common(solve_cmd);

    auto* strings_cmd = app.add_subcommand("strings", "Solve the string-system program on a node grid");
    strings_cmd->add_option("--config", config, "Problem file (JSON)")->required();
    add_common(strings_cmd);

    auto* vault_cmd = app.add_subcommand("vault", "Lift a Michell membrane to a vault surface");
    vault_cmd->add_option("--config", config, "Problem file (JSON)")->required();
    add_common(vault_cmd);

    auto* verify_cmd = app.add_subcommand("verify", "Recompute optimality residuals of a solve output");
    verify_cmd->add_option("dir", dir, "Directory written by 'solve'")->required();
    add_common(verify_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    RunOptions opts{out, log};
    try {
        if (*verify_cmd)
            return run_verify(dir, opts);
        const ProblemConfig cfg = load_config(config);
        if (*solve_cmd)
            return sweep.empty() ? run_solve(cfg, opts) : run_sweep(cfg, split_values(sweep), opts);
        if (*strings_cmd)
            return run_strings(cfg, opts);
        if (*vault_cmd)
            return run_vault(cfg, opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace membrane
