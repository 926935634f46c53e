#pragma once

#include "membrane/geometry.hpp"
#include "membrane/material.hpp"
#include "membrane/postprocess.hpp"

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

namespace membrane {

// Elevation z = -w / sqrt2 over a Michell membrane solution and the
// push-forward of its thickness onto the surface.
struct VaultSurface {
    Eigen::VectorXd z;                // all mesh vertices, zero on the boundary
    std::vector<Vec2d> grad_z;        // per element
    std::vector<double> beta;         // planar density
    std::vector<double> J;            // sqrt(1 + |grad z|^2)
    std::vector<double> beta_surface; // beta / J
    double mass = 0.0;                // sum beta * area
    double surface_mass = 0.0;        // sum beta_surface * area * J
    double max_height = 0.0;
    double V0 = 1.0;
};

// Throws std::logic_error for a non-Michell material and std::domain_error
// when a load component is upward or Z_h vanishes.
VaultSurface lift(const FemSolution& fem, const Mesh& mesh, const Materiald& mat, double V0);

// Largest relative deviation of beta Z / V0 from varrho0(sigma, q) over
// non-void elements whose q matches sigma theta.
double varrho_consistency(const VaultSurface& vs, const FemSolution& fem, const Materiald& mat);

// Wavefront text mesh: "v x y z" per vertex, "f i j k" per element (1-based).
void write_obj(std::ostream& os, const Mesh& mesh, const VaultSurface& vs);

// elem_id,beta,beta_surface
void write_vault_csv(std::ostream& os, const VaultSurface& vs);

} // namespace membrane
