#pragma once

#include "membrane/cone_program.hpp"
#include "membrane/geometry.hpp"
#include "membrane/material.hpp"

#include <Eigen/SparseCore>

namespace membrane {

// Element-by-interior-node matrices of constant strain and slope:
// xi = (B11 u1, B22 u2, B12_1 u1 + B12_2 u2) in isometric coordinates,
// theta = (D1 w, D2 w).
struct GeometricOperators {
    Eigen::SparseMatrix<double> B11, B22, B12_1, B12_2, D1, D2;
    Eigen::VectorXd f;
};

GeometricOperators geometric_operators(const Mesh& mesh);

struct AssembledProgram {
    ConeProgram program;
    bool infeasible = false;   // a loaded row has no incident element
};

// Program (P*_h): minimize sum(r0 + tau33) subject to discrete equilibrium,
// tau in Psd3 per element, and r0 >= rho0(tau in-plane) through an auxiliary
// cone copy coupled by equalities.
AssembledProgram assemble_dual_program(const Mesh& mesh, const Materiald& mat, const Eigen::VectorXd& f, double V0);

// Per-element strain and slope of nodal fields (length m each).
void element_fields(const GeometricOperators& ops, const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                    const Eigen::VectorXd& w, std::vector<Sym2d>& xi, std::vector<Vec2d>& theta);

} // namespace membrane
