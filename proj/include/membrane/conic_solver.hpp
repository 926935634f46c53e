#pragma once

#include "membrane/cone_program.hpp"

#include <Eigen/Core>
#include <iosfwd>
#include <string>

namespace membrane {

enum class SolveStatus { Optimal, MaxIter, NumericalFailure, Infeasible };

std::string to_string(SolveStatus s);

struct SolverOptions {
    double gap_tol = 1e-8;
    double feas_tol = 1e-8;
    int max_iter = 200;
    double regularization = 1e-9;
    int refine_steps = 3;           // iterative refinement passes per KKT solve
    double step_fraction = 0.99;
    std::ostream* log = nullptr;   // one line per iteration when set
};

struct ConicSolution {
    Eigen::VectorXd x, y, s;
    SolveStatus status = SolveStatus::NumericalFailure;
    double rel_gap = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    int iterations = 0;
    std::string message;
};

// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
// Mehrotra predictor-corrector steps.
ConicSolution solve(const ConeProgram& prog, const SolverOptions& opts = {});

// Smallest cone margin over all blocks of v (>= 0 means v lies in the cone).
double min_cone_margin(const ConeProgram& prog, const Eigen::VectorXd& v, bool dual = false);

} // namespace membrane
