#pragma once

#include "membrane/assembly.hpp"
#include "membrane/conic_solver.hpp"
#include "membrane/geometry.hpp"
#include "membrane/material.hpp"

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

namespace membrane {

// Physical fields of a solved (P*_h): nodal displacements (interior nodes)
// and per-element strain, slope, stress and energy records.
struct FemSolution {
    double Z_h = 0.0;          // sum(r0 + tau33)
    double Z_load = 0.0;       // <w, f>
    double rel_gap = 0.0;      // |pobj - dobj| / max(1, |pobj|) of the solve
    SolveStatus status = SolveStatus::Optimal;
    bool partial = false;      // fields come from a non-optimal iterate
    double feasibility_scale = 1.0;   // t in (u, w) -> (t^2 u, t w)
    double energy_balance = 1.0;      // t in (r0, tau_in, tau33) -> (t r0, t tau_in, tau33 / t)
    Eigen::VectorXd u1, u2, w, f;
    std::vector<double> areas;
    std::vector<Sym2d> xi, sigma_hat;
    std::vector<Vec2d> theta, q_hat;
    std::vector<double> r0, tau33;
    std::vector<Sym3d> tau;    // raw per-element tau in isometric coordinates
};

// Builds a FemSolution from nodal multipliers and the per-element dual
// variables (r0 and the six tau coordinates).
FemSolution fem_from_fields(const Mesh& mesh, const Materiald& mat, const Eigen::VectorXd& f, const Eigen::VectorXd& u1,
                            const Eigen::VectorXd& u2, const Eigen::VectorXd& w, const std::vector<double>& r0,
                            const std::vector<Sym3d>& tau, bool restore_feasibility);

// Reads the solver output. The displacements are shrunk by the smallest
// factor t <= 1 that puts every element of (xi, theta) back into C exactly.
FemSolution recover_fields(const ConeProgram& prog, const ConicSolution& sol, const Mesh& mesh, const Materiald& mat);

struct Design {
    double V0 = 1.0;
    double Z_h = 0.0;
    std::vector<double> b_raw, b_avg, b_trim;
    double b0 = 0.0;
    double mass = 0.0;          // sum b_raw * area
    double C_min = 0.0;
    std::vector<char> is_void;
    std::vector<double> mu_check;   // density of the optimal material
    std::vector<Sym2d> sigma_check;
    std::vector<Vec2d> q_check;
    Eigen::VectorXd u1_check, u2_check, w_check;
};

double compliance(double Z, double V0);

// b_raw = (2 V0 / Z) r0 / area. Throws std::domain_error when Z <= 0.
Design thickness(const FemSolution& fem, double V0);

// Replaces each lower/upper pair of a square cell by its area-weighted mean.
void average_pairs(Design& design, const Mesh& mesh);

// b_trim = min(b_avg, b0).
void trim(Design& design, double b0);

// Scaled stresses and displacements of the optimal membrane for volume V0.
void scale_optimal(Design& design, const FemSolution& fem, const Materiald& mat);

struct OptimalityReport {
    double cond_i = 0.0;        // sum area |<xi + theta theta^T/2, sigma> - rho0(sigma)|
    double cond_ii = 0.0;       // sum area <sigma^+ d, d> / 2 with d = q - sigma theta
    double cond_iii_r0 = 0.0;   // sum |r0 - area rho0(sigma)|
    double cond_iii_tau33 = 0.0;   // sum |tau33 - area <sigma^+ q, q> / 2|
    double equi_repartition = 0.0; // |sum r0 - sum tau33|
    double value_gap = 0.0;     // |<w, f> - sum(r0 + tau33)|
    double rel_gap = 0.0;
    int worst_element = -1;     // element with the largest condition (iii) residual
    int membership_failures = 0;
    double max_rho_plus = 0.0;
    double u_inf = 0.0, w_inf = 0.0;
    bool u_bound_ok = true, w_bound_ok = true;
    bool two_point_checked = false;
    int two_point_pairs = 0;
    double two_point_max_excess = 0.0;   // max of lhs - rhs over sampled pairs
    double min_sigma_eig = 0.0;          // min over elements of lambda_min(sigma) / |sigma|

    double max_residual() const;
};

// Residuals of the discrete optimality conditions. In Michell mode the
// two-point inequality is sampled on `pairs` random vertex pairs.
OptimalityReport verify_optimality(const FemSolution& fem, const Mesh& mesh, const Materiald& mat, int pairs = 10000,
                                   unsigned seed = 12345);

struct HookeRecord {
    int element = -1;
    double density = 0.0;       // Trace of the Hooke field per unit area
    double s_I = 0.0, s_II = 0.0;
    Vec2d e_I = Vec2d::UnitX(), e_II = Vec2d::UnitY();
};

// Fibrous Hooke field that solves the free material problem with trace
// budget Lambda0 (Michell mode). Void elements are skipped.
std::vector<HookeRecord> fmd_hooke_field(const FemSolution& fem, const Materiald& mat, double Lambda0);

// Element CSV: elem_id,cx,cy,area,b_raw,b_avg,b_trim,s11,s22,s12,q1,q2
void write_element_csv(std::ostream& os, const Mesh& mesh, const FemSolution& fem, const Design& design);

// Nodal CSV over all vertices: node_id,x,y,interior,u1,u2,w
void write_node_csv(std::ostream& os, const Mesh& mesh, const FemSolution& fem);

// Dual variables per element: elem_id,r0,t11,t22,t33,t12,t13,t23
void write_dual_csv(std::ostream& os, const FemSolution& fem);

} // namespace membrane
