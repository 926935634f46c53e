#pragma once

#include "membrane/conic_solver.hpp"
#include "membrane/geometry.hpp"

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace membrane {

// Candidate nodes of a string system; boundary nodes are supports.
struct StringGrid {
    double a = 1.0;
    std::vector<Eigen::Vector2d> nodes;
    std::vector<char> interior;
    double spacing = 0.0;
};

// k x k equispaced nodes on [0, a]^2 (k >= 1; k = 1 places one node at the center).
StringGrid make_grid(double a, int k);

struct StringPair {
    int i = 0, j = 0;
    double length = 0.0;
    Eigen::Vector2d dir = Eigen::Vector2d::UnitX();   // (x_i - x_j) / |x_i - x_j|
};

// Unordered node pairs; max_length <= 0 keeps all of them. Throws when the
// unfiltered count would exceed max_pairs.
std::vector<StringPair> build_pairs(const StringGrid& grid, double max_length = 0.0, size_t max_pairs = 10000000);

// Pairs given by end points that must coincide with grid nodes.
std::vector<StringPair> pairs_from_segments(const StringGrid& grid, const std::vector<std::array<Eigen::Vector2d, 2>>& segs);

// Transverse load per grid node. Point loads must sit on a node; line and
// pressure loads are lumped to the nearest nodes with a warning.
Eigen::VectorXd string_nodal_load(const StringGrid& grid, const LoadSpec& load, std::vector<std::string>* warnings = nullptr);

struct StringProgram {
    ConeProgram program;
    std::vector<int> node_row;   // grid node -> first of its three rows, or -1
    bool infeasible = false;     // a loaded interior node has no incident pair
};

// Per pair a Quad(3) block v with Pi = (v0 + v1)/sqrt2, t = (v0 - v1)/sqrt2,
// pi = v2, so that 2 Pi t >= pi^2. Minimizes sum length (Pi + t) subject to
// in-plane and transverse balance at interior nodes.
StringProgram assemble_string_program(const StringGrid& grid, const std::vector<StringPair>& pairs,
                                      const Eigen::VectorXd& f);

struct StringSystem {
    std::vector<StringPair> pairs;
    std::vector<double> Pi, pi, mu;    // mu: mass per unit length
    double Z_strings = 0.0;
    double V0 = 1.0;
    double inplane_residual = 0.0;     // max over interior nodes
    double transverse_residual = 0.0;
    SolveStatus status = SolveStatus::NumericalFailure;
    ConicSolution solution;
};

StringSystem solve_strings(const StringGrid& grid, const std::vector<StringPair>& pairs, const StringProgram& prog,
                           const Eigen::VectorXd& f, double V0, const SolverOptions& opts = {});

// x1,y1,x2,y2,Pi,pi,mu_density for strings with Pi above 1e-10 max(Pi).
void write_string_csv(std::ostream& os, const StringGrid& grid, const StringSystem& sys);

} // namespace membrane
