#include "membrane/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace membrane {

namespace {

// 1/2 <sigma^+ q, q> ignoring directions with eigenvalue below rel * |sigma|.
double half_pinv_quad(const Sym2d& sigma, const Vec2d& q, double rel = 1e-14)
{
    const auto s = spectral(sigma);
    const double scale = std::max(std::abs(s.lI), std::abs(s.lII));
    double quad = 0.0;
    const double lam[2] = {s.lI, s.lII};
    const Vec2d vec[2] = {s.eI, s.eII};
    for (int i = 0; i < 2; ++i) {
        if (lam[i] > rel * scale && lam[i] > 0.0) {
            const double c = vec[i].dot(q);
            quad += c * c / lam[i];
        }
    }
    return 0.5 * quad;
}

void format_row(std::ostream& os, const char* fmt, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, fmt, v);
    os << buf;
}

void csv_num(std::ostream& os, double v)
{
    os << ',';
    format_row(os, "%.17g", v);
}

} // namespace

FemSolution fem_from_fields(const Mesh& mesh, const Materiald& mat, const Eigen::VectorXd& f, const Eigen::VectorXd& u1,
                            const Eigen::VectorXd& u2, const Eigen::VectorXd& w, const std::vector<double>& r0,
                            const std::vector<Sym3d>& tau, bool restore_feasibility)
{
    const int ne = mesh.num_elements();
    const int m = mesh.num_interior();
    if (u1.size() != m || u2.size() != m || w.size() != m || f.size() != m)
        throw std::invalid_argument("nodal vectors must have one entry per interior node");
    if (static_cast<int>(r0.size()) != ne || static_cast<int>(tau.size()) != ne)
        throw std::invalid_argument("element records must have one entry per element");

    FemSolution fem;
    fem.f = f;
    fem.u1 = u1;
    fem.u2 = u2;
    fem.w = w;
    fem.areas = mesh.areas;
    fem.r0 = r0;
    fem.tau = tau;
    fem.tau33.resize(ne);
    fem.sigma_hat.resize(ne);
    fem.q_hat.resize(ne);
    for (int e = 0; e < ne; ++e) {
        fem.tau33[e] = tau[e](2);
        fem.sigma_hat[e] = in_plane(tau[e]) / mesh.areas[e];
        fem.q_hat[e] = transverse(tau[e]) / mesh.areas[e];
    }

    const GeometricOperators ops = geometric_operators(mesh);
    element_fields(ops, fem.u1, fem.u2, fem.w, fem.xi, fem.theta);

    if (restore_feasibility) {
        double worst = 0.0;
        for (int e = 0; e < ne; ++e)
            worst = std::max(worst, rho_plus(Sym2d(fem.xi[e] + 0.5 * outer(fem.theta[e])), mat));
        if (worst > 1.0) {
            const double t = 1.0 / std::sqrt(worst);
            fem.feasibility_scale = t;
            fem.u1 *= t * t;
            fem.u2 *= t * t;
            fem.w *= t;
            for (int e = 0; e < ne; ++e) {
                fem.xi[e] *= t * t;
                fem.theta[e] *= t;
            }
        }
    }

    fem.Z_h = 0.0;
    for (int e = 0; e < ne; ++e)
        fem.Z_h += fem.r0[e] + fem.tau33[e];
    fem.Z_load = fem.w.dot(f);
    return fem;
}

FemSolution recover_fields(const ConeProgram& prog, const ConicSolution& sol, const Mesh& mesh, const Materiald& mat)
{
    const MembraneLayout& lay = prog.layout;
    const int ne = lay.num_elements;
    const int m = lay.m;
    std::vector<double> r0(ne);
    std::vector<Sym3d> tau(ne);
    for (int e = 0; e < ne; ++e) {
        r0[e] = sol.x(lay.r0[e]);
        tau[e] = sol.x.segment<6>(lay.tau[e]);
    }
    // The objective is flat to second order along (r0, tau_in, tau33) ->
    // (t r0, t tau_in, tau33 / t), which keeps every constraint, so the split
    // between the two energies is loose at solver tolerance. The minimizing t
    // balances it exactly and can only lower the objective.
    double sum_r0 = 0.0, sum_t33 = 0.0;
    for (int e = 0; e < ne; ++e) {
        sum_r0 += r0[e];
        sum_t33 += tau[e](2);
    }
    double balance = 1.0;
    if (sum_r0 > 0.0 && sum_t33 > 0.0) {
        balance = std::sqrt(sum_t33 / sum_r0);
        for (int e = 0; e < ne; ++e) {
            r0[e] *= balance;
            tau[e](0) *= balance;
            tau[e](1) *= balance;
            tau[e](3) *= balance;
            tau[e](2) /= balance;
        }
    }
    FemSolution fem = fem_from_fields(mesh, mat, prog.b.segment(lay.row_w, m), sol.y.segment(lay.row_u1, m),
                                      sol.y.segment(lay.row_u2, m), sol.y.segment(lay.row_w, m), r0, tau, true);
    fem.energy_balance = balance;
    fem.status = sol.status;
    fem.partial = sol.status != SolveStatus::Optimal;
    fem.rel_gap = std::abs(sol.primal_obj - sol.dual_obj) / std::max(1.0, std::abs(sol.primal_obj));
    return fem;
}

double compliance(double Z, double V0)
{
    if (Z <= 0.0)
        return 0.0;
    return 0.75 * std::cbrt(std::pow(Z, 4) / (2.0 * V0));
}

Design thickness(const FemSolution& fem, double V0)
{
    if (!(V0 > 0.0))
        throw std::domain_error("V0 must be positive");
    if (!(fem.Z_h > 1e-14))
        throw std::domain_error("degenerate load: Z_h vanishes");
    Design d;
    d.V0 = V0;
    d.Z_h = fem.Z_h;
    const size_t ne = fem.r0.size();
    d.b_raw.resize(ne);
    d.mass = 0.0;
    for (size_t e = 0; e < ne; ++e) {
        d.b_raw[e] = 2.0 * V0 / fem.Z_h * fem.r0[e] / fem.areas[e];
        d.mass += d.b_raw[e] * fem.areas[e];
    }
    d.b_avg = d.b_raw;
    d.b_trim = d.b_raw;
    d.b0 = ne ? *std::max_element(d.b_raw.begin(), d.b_raw.end()) : 0.0;
    d.C_min = compliance(fem.Z_h, V0);
    return d;
}

void average_pairs(Design& design, const Mesh& mesh)
{
    design.b_avg = design.b_raw;
    for (const auto& cell : mesh.cell_elements) {
        const int lo = cell[0], up = cell[1];
        if (lo < 0 || up < 0)
            continue;
        const double al = mesh.areas[lo], au = mesh.areas[up];
        const double mean = (al * design.b_raw[lo] + au * design.b_raw[up]) / (al + au);
        design.b_avg[lo] = mean;
        design.b_avg[up] = mean;
    }
    design.b_trim = design.b_avg;
    design.b0 = design.b_avg.empty() ? 0.0 : *std::max_element(design.b_avg.begin(), design.b_avg.end());
}

void trim(Design& design, double b0)
{
    if (!(b0 > 0.0))
        throw std::domain_error("trim cap must be positive");
    design.b0 = b0;
    design.b_trim.resize(design.b_avg.size());
    for (size_t e = 0; e < design.b_avg.size(); ++e)
        design.b_trim[e] = std::min(design.b_avg[e], b0);
}

void scale_optimal(Design& design, const FemSolution& fem, const Materiald& mat)
{
    const double ratio = fem.Z_h / (2.0 * design.V0);
    const size_t ne = fem.sigma_hat.size();
    std::vector<double> r(ne);
    double rmax = 0.0;
    for (size_t e = 0; e < ne; ++e) {
        r[e] = rho_polar(fem.sigma_hat[e], mat);
        rmax = std::max(rmax, r[e]);
    }
    design.is_void.assign(ne, 0);
    design.mu_check.assign(ne, 0.0);
    design.sigma_check.assign(ne, Sym2d::Zero());
    design.q_check.assign(ne, Vec2d::Zero());
    for (size_t e = 0; e < ne; ++e) {
        if (!(r[e] > 1e-12 * rmax)) {
            design.is_void[e] = 1;
            continue;
        }
        design.mu_check[e] = r[e] / ratio;
        design.sigma_check[e] = std::pow(ratio, 2.0 / 3.0) * fem.sigma_hat[e] / r[e];
        design.q_check[e] = ratio * fem.q_hat[e] / r[e];
    }
    design.u1_check = std::pow(ratio, 2.0 / 3.0) * fem.u1;
    design.u2_check = std::pow(ratio, 2.0 / 3.0) * fem.u2;
    design.w_check = std::cbrt(ratio) * fem.w;
}

double OptimalityReport::max_residual() const
{
    return std::max({cond_i, cond_ii, cond_iii_r0, cond_iii_tau33, equi_repartition, value_gap});
}

OptimalityReport verify_optimality(const FemSolution& fem, const Mesh& mesh, const Materiald& mat, int pairs,
                                   unsigned seed)
{
    OptimalityReport rep;
    const size_t ne = fem.sigma_hat.size();
    double sum_r0 = 0.0, sum_t33 = 0.0, worst_iii = -1.0;
    rep.min_sigma_eig = 1.0;
    for (size_t e = 0; e < ne; ++e) {
        const double area = fem.areas[e];
        const Sym2d& sig = fem.sigma_hat[e];
        const Vec2d& q = fem.q_hat[e];
        const Sym2d total = fem.xi[e] + 0.5 * outer(fem.theta[e]);
        const double r0s = rho_polar(sig, mat);

        rep.cond_i += area * std::abs(total.dot(sig) - r0s);

        const Vec2d d = q - to_matrix(sig) * fem.theta[e];
        rep.cond_ii += area * half_pinv_quad(sig, d);

        const double e_r0 = std::abs(fem.r0[e] - area * r0s);
        const double e_t33 = std::abs(fem.tau33[e] - area * half_pinv_quad(sig, q));
        rep.cond_iii_r0 += e_r0;
        rep.cond_iii_tau33 += e_t33;
        if (std::max(e_r0, e_t33) > worst_iii) {
            worst_iii = std::max(e_r0, e_t33);
            rep.worst_element = static_cast<int>(e);
        }

        const double rp = rho_plus(total, mat);
        rep.max_rho_plus = std::max(rep.max_rho_plus, rp);
        if (!membership_C(fem.xi[e], fem.theta[e], mat))
            ++rep.membership_failures;

        const auto sp = spectral(sig);
        const double scale = std::max(std::abs(sp.lI), std::abs(sp.lII));
        if (scale > 0.0)
            rep.min_sigma_eig = std::min(rep.min_sigma_eig, sp.lII / scale);

        sum_r0 += fem.r0[e];
        sum_t33 += fem.tau33[e];
    }
    rep.equi_repartition = std::abs(sum_r0 - sum_t33);
    rep.value_gap = std::abs(fem.Z_load - (sum_r0 + sum_t33));
    rep.rel_gap = fem.rel_gap;

    rep.u_inf = 0.0;
    for (Eigen::Index j = 0; j < fem.u1.size(); ++j)
        rep.u_inf = std::max(rep.u_inf, std::hypot(fem.u1(j), fem.u2(j)));
    rep.w_inf = fem.w.size() ? fem.w.cwiseAbs().maxCoeff() : 0.0;
    const double diam = mesh.diameter();
    rep.u_bound_ok = rep.u_inf <= diam / mat.c1_equiv * (1.0 + 1e-9);
    rep.w_bound_ok = rep.w_inf <= diam / std::sqrt(2.0 * mat.c1_equiv) * (1.0 + 1e-9);

    if (mat.michell() && pairs > 0) {
        // Vertices of the closed domain with their nodal (u, w); zero on the boundary.
        std::vector<char> used(mesh.vertices.size(), 0);
        for (const auto& el : mesh.elements)
            for (int v : el.v)
                used[v] = 1;
        std::vector<int> verts;
        for (size_t v = 0; v < used.size(); ++v)
            if (used[v])
                verts.push_back(static_cast<int>(v));
        auto nodal = [&](int v, Eigen::Vector2d& u, double& w) {
            const int j = mesh.interior_map[v];
            if (j < 0) {
                u.setZero();
                w = 0.0;
            } else {
                u = Eigen::Vector2d(fem.u1(j), fem.u2(j));
                w = fem.w(j);
            }
        };
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<size_t> pick(0, verts.size() - 1);
        rep.two_point_checked = true;
        rep.two_point_max_excess = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < pairs && verts.size() > 1; ++k) {
            const int a = verts[pick(rng)];
            int b = verts[pick(rng)];
            while (b == a)
                b = verts[pick(rng)];
            Eigen::Vector2d ua, ub;
            double wa, wb;
            nodal(a, ua, wa);
            nodal(b, ub, wb);
            const Eigen::Vector2d dx = mesh.vertices[a] - mesh.vertices[b];
            const double lhs = 0.5 * (wa - wb) * (wa - wb) + (ua - ub).dot(dx);
            const double rhs = dx.squaredNorm() / mat.c1_equiv;
            rep.two_point_max_excess = std::max(rep.two_point_max_excess, lhs - rhs);
            ++rep.two_point_pairs;
        }
    }
    return rep;
}

std::vector<HookeRecord> fmd_hooke_field(const FemSolution& fem, const Materiald& mat, double Lambda0)
{
    if (!mat.michell())
        throw std::logic_error("the fibrous Hooke field is defined for the Michell law only");
    if (!(fem.Z_h > 0.0))
        throw std::domain_error("degenerate load: Z_h vanishes");
    const size_t ne = fem.sigma_hat.size();
    double rmax = 0.0;
    std::vector<double> r(ne);
    for (size_t e = 0; e < ne; ++e) {
        r[e] = rho_polar(fem.sigma_hat[e], mat);
        rmax = std::max(rmax, r[e]);
    }
    std::vector<HookeRecord> out;
    for (size_t e = 0; e < ne; ++e) {
        if (!(r[e] > 1e-12 * rmax))
            continue;
        const Sym2d& sig = fem.sigma_hat[e];
        const double tr = sig(0) + sig(1);
        const auto sp = spectral(Sym2d(sig / tr));
        HookeRecord h;
        h.element = static_cast<int>(e);
        h.density = 2.0 * Lambda0 / fem.Z_h * r[e];
        h.s_I = sp.lI;
        h.s_II = sp.lII;
        h.e_I = sp.eI;
        h.e_II = sp.eII;
        if (std::abs(sp.lI - sp.lII) <= 1e-12) {
            h.e_I = Vec2d::UnitX();
            h.e_II = Vec2d::UnitY();
        }
        out.push_back(h);
    }
    return out;
}

void write_element_csv(std::ostream& os, const Mesh& mesh, const FemSolution& fem, const Design& design)
{
    os << "elem_id,cx,cy,area,b_raw,b_avg,b_trim,s11,s22,s12,q1,q2\n";
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::Vector2d c = mesh.centroid(e);
        os << e;
        csv_num(os, c.x());
        csv_num(os, c.y());
        csv_num(os, mesh.areas[e]);
        csv_num(os, design.b_raw.empty() ? 0.0 : design.b_raw[e]);
        csv_num(os, design.b_avg.empty() ? 0.0 : design.b_avg[e]);
        csv_num(os, design.b_trim.empty() ? 0.0 : design.b_trim[e]);
        for (int k = 0; k < 3; ++k)
            csv_num(os, fem.sigma_hat[e](k));
        csv_num(os, fem.q_hat[e](0));
        csv_num(os, fem.q_hat[e](1));
        os << '\n';
    }
}

void write_node_csv(std::ostream& os, const Mesh& mesh, const FemSolution& fem)
{
    os << "node_id,x,y,interior,u1,u2,w\n";
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        const int j = mesh.interior_map[v];
        os << v;
        csv_num(os, mesh.vertices[v].x());
        csv_num(os, mesh.vertices[v].y());
        os << ',' << (j >= 0 ? 1 : 0);
        csv_num(os, j >= 0 ? fem.u1(j) : 0.0);
        csv_num(os, j >= 0 ? fem.u2(j) : 0.0);
        csv_num(os, j >= 0 ? fem.w(j) : 0.0);
        os << '\n';
    }
}

void write_dual_csv(std::ostream& os, const FemSolution& fem)
{
    os << "elem_id,r0,t11,t22,t33,t12,t13,t23\n";
    for (size_t e = 0; e < fem.r0.size(); ++e) {
        os << e;
        csv_num(os, fem.r0[e]);
        for (int k = 0; k < 6; ++k)
            csv_num(os, fem.tau[e](k));
        os << '\n';
    }
}

} // namespace membrane
