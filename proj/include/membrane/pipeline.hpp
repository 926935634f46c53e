#pragma once

#include "membrane/assembly.hpp"
#include "membrane/config.hpp"
#include "membrane/conic_solver.hpp"
#include "membrane/postprocess.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace membrane {

// Exit codes of the command-line pipeline.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailure = 2;

struct RunOptions {
    std::string out_dir;    // overrides the configured directory when set
    std::string log_path;   // solver iteration log
};

Materiald make_material(const ProblemConfig& cfg);
Mesh make_mesh(const ProblemConfig& cfg);

// geometry -> assembly -> solver -> postprocess, without writing files.
struct SolveResult {
    Mesh mesh;
    Materiald mat;
    Eigen::VectorXd f;
    AssembledProgram assembled;
    ConicSolution sol;
    FemSolution fem;
    Design design;
    OptimalityReport report;
    std::vector<std::string> warnings;
    bool has_design = false;
    double seconds = 0.0;
};

SolveResult solve_problem(const ProblemConfig& cfg, std::ostream* log = nullptr);

int run_solve(const ProblemConfig& cfg, const RunOptions& opts);
int run_strings(const ProblemConfig& cfg, const RunOptions& opts);
int run_vault(const ProblemConfig& cfg, const RunOptions& opts);

// Re-reads a solve output directory and recomputes the optimality report.
int run_verify(const std::string& dir, const RunOptions& opts);

// One solve per Poisson ratio ("michell" or a number), each in its own
// subdirectory, plus sweep.json.
int run_sweep(const ProblemConfig& cfg, const std::vector<std::string>& values, const RunOptions& opts);

} // namespace membrane
