#include "membrane/vault.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace membrane {

VaultSurface lift(const FemSolution& fem, const Mesh& mesh, const Materiald& mat, double V0)
{
    if (!mat.michell())
        throw std::logic_error("vault lifting needs the Michell material");
    if (!(fem.Z_h > 0.0))
        throw std::domain_error("degenerate load: Z_h vanishes");
    for (Eigen::Index j = 0; j < fem.f.size(); ++j)
        if (fem.f(j) > 0.0)
            throw std::domain_error("vault lifting needs a downward (nonpositive) load");

    VaultSurface vs;
    vs.V0 = V0;
    const double r2 = 1.0 / std::sqrt(2.0);
    vs.z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
    for (int j = 0; j < mesh.num_interior(); ++j)
        vs.z(mesh.interior_vertices[j]) = -r2 * fem.w(j);
    vs.max_height = vs.z.size() ? vs.z.maxCoeff() : 0.0;

    const int ne = mesh.num_elements();
    vs.grad_z.resize(ne);
    vs.beta.resize(ne);
    vs.J.resize(ne);
    vs.beta_surface.resize(ne);
    const double scale = V0 / fem.Z_h;
    for (int e = 0; e < ne; ++e) {
        const Vec2d g = -r2 * fem.theta[e];
        const Sym2d& sig = fem.sigma_hat[e];
        vs.grad_z[e] = g;
        // rho0(sigma) is the trace of sigma scaled by 1/sqrt(E).
        vs.beta[e] = scale * (rho_polar(sig, mat) + outer(g).dot(sig));
        vs.J[e] = std::sqrt(1.0 + g.squaredNorm());
        vs.beta_surface[e] = vs.beta[e] / vs.J[e];
        vs.mass += vs.beta[e] * mesh.areas[e];
        vs.surface_mass += vs.beta_surface[e] * mesh.areas[e] * vs.J[e];
    }
    return vs;
}

double varrho_consistency(const VaultSurface& vs, const FemSolution& fem, const Materiald& mat)
{
    const size_t ne = vs.beta.size();
    double rmax = 0.0;
    for (size_t e = 0; e < ne; ++e)
        rmax = std::max(rmax, rho_polar(fem.sigma_hat[e], mat));
    double worst = 0.0;
    for (size_t e = 0; e < ne; ++e) {
        const Sym2d& sig = fem.sigma_hat[e];
        if (!(rho_polar(sig, mat) > 1e-12 * rmax))
            continue;
        const Vec2d q = to_matrix(sig) * fem.theta[e];
        const double ref = varrho_polar(sig, q, mat);
        const double val = vs.beta[e] * fem.Z_h / vs.V0;
        if (!std::isfinite(ref))
            return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(val - ref) / std::max(std::abs(ref), 1e-300));
    }
    return worst;
}

void write_obj(std::ostream& os, const Mesh& mesh, const VaultSurface& vs)
{
    char buf[128];
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", mesh.vertices[v].x(), mesh.vertices[v].y(),
                      vs.z(static_cast<Eigen::Index>(v)));
        os << buf;
    }
    for (const auto& el : mesh.elements)
        os << "f " << el.v[0] + 1 << ' ' << el.v[1] + 1 << ' ' << el.v[2] + 1 << '\n';
}

void write_vault_csv(std::ostream& os, const VaultSurface& vs)
{
    os << "elem_id,beta,beta_surface\n";
    char buf[96];
    for (size_t e = 0; e < vs.beta.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e, vs.beta[e], vs.beta_surface[e]);
        os << buf;
    }
}

} // namespace membrane
