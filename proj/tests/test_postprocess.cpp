#include "doctest.h"
#include "test_util.hpp"

#include "membrane/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace membrane;
using testing_util::Gen;

namespace {

ProblemConfig point_problem(int n, double nu, MeshPattern pattern = MeshPattern::UniformSENW)
{
    ProblemConfig cfg;
    cfg.n = n;
    cfg.nu = nu;
    cfg.pattern = pattern;
    cfg.loads.components.push_back(PointLoad{Eigen::Vector2d(0.5, 0.5), -1.0});
    return cfg;
}

ProblemConfig mixed_problem(int n, double nu)
{
    ProblemConfig cfg;
    cfg.n = n;
    cfg.nu = nu;
    cfg.pattern = MeshPattern::QuadrantSymmetric;
    cfg.loads.components.push_back(PointLoad{Eigen::Vector2d(0.25, 0.75), -1.0});
    cfg.loads.components.push_back(LineLoad{{0.1, 0.2}, {0.9, 0.3}, -0.5});
    cfg.loads.components.push_back(PressureLoad{-0.3, {}});
    return cfg;
}

// A field record with chosen per-element tau and zero displacements.
FemSolution synthetic(const Mesh& mesh, const Materiald& mat, const std::vector<Sym3d>& tau,
                      const std::vector<double>& r0)
{
    const int m = mesh.num_interior();
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    return fem_from_fields(mesh, mat, z, z, z, z, r0, tau, false);
}

Sym3d tau_of(const Sym2d& sig, const Vec2d& q, double t33)
{
    Sym3d t;
    t << sig(0), sig(1), t33, sig(2), q(0), q(1);
    return t;
}

} // namespace

TEST_CASE("recovered stresses are tau per unit area")
{
    const Mesh mesh = build_mesh(1.0, 3, MeshPattern::UniformSENW);
    const Materiald mat = build_material(1.0, 0.0);
    const int ne = mesh.num_elements();
    std::vector<Sym3d> tau(ne, Sym3d::Zero());
    std::vector<double> r0(ne, 0.0);
    tau[4](0) = mesh.areas[4];
    tau[5] = tau_of(Sym2d(2, 3, 0.5), Vec2d(0.25, -1), 4.0) * mesh.areas[5];
    const FemSolution fem = synthetic(mesh, mat, tau, r0);
    CHECK((fem.sigma_hat[4] - Sym2d(1, 0, 0)).norm() <= 1e-14);
    CHECK((fem.sigma_hat[5] - Sym2d(2, 3, 0.5)).norm() <= 1e-13);
    CHECK((fem.q_hat[5] - Vec2d(0.25, -1)).norm() <= 1e-13);
    CHECK(fem.tau33[5] == doctest::Approx(4.0 * mesh.areas[5]));
    CHECK(fem.sigma_hat[0].norm() == 0.0);
    CHECK_THROWS_AS(fem_from_fields(mesh, mat, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                                    Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), r0, tau, false),
                    std::invalid_argument);
}

TEST_CASE("zero load gives zero fields")
{
    ProblemConfig cfg;
    cfg.n = 2;
    cfg.loads.components.push_back(PointLoad{Eigen::Vector2d(0.5, 0.5), 0.0});
    const SolveResult res = solve_problem(cfg);
    CHECK(res.sol.status == SolveStatus::Optimal);
    CHECK(std::abs(res.fem.Z_h) <= 1e-8);
    for (size_t e = 0; e < res.fem.sigma_hat.size(); ++e) {
        CHECK(res.fem.sigma_hat[e].norm() <= 1e-7);
        CHECK(res.fem.q_hat[e].norm() <= 1e-7);
    }
    CHECK_FALSE(res.has_design);
    FemSolution zero = res.fem;
    zero.Z_h = 0.0;
    CHECK_THROWS_AS(thickness(zero, 1.0), std::domain_error);
}

TEST_CASE("solved programs satisfy the discrete optimality conditions")
{
    for (const ProblemConfig& cfg : {point_problem(2, 0.0), point_problem(2, -1.0), point_problem(8, 0.3),
                                     point_problem(8, -1.0, MeshPattern::QuadrantSymmetric), mixed_problem(8, -0.4),
                                     mixed_problem(8, -1.0)}) {
        const SolveResult res = solve_problem(cfg);
        REQUIRE(res.sol.status == SolveStatus::Optimal);
        const FemSolution& fem = res.fem;
        const OptimalityReport& rep = res.report;
        const double Z = fem.Z_h;
        REQUIRE(Z > 0.0);
        CHECK(std::abs(fem.Z_load - Z) <= 1e-7 * Z);
        CHECK(rep.cond_i <= 1e-6 * Z);
        CHECK(rep.cond_ii <= 1e-6 * Z);
        CHECK(rep.cond_iii_r0 <= 1e-6 * Z);
        CHECK(rep.cond_iii_tau33 <= 1e-6 * Z);
        CHECK(rep.equi_repartition <= 1e-6 * Z);
        CHECK(std::abs(fem.energy_balance - 1.0) <= 1e-3);
        CHECK(rep.membership_failures == 0);
        CHECK(rep.u_bound_ok);
        CHECK(rep.w_bound_ok);
        CHECK(rep.min_sigma_eig >= -1e-8);
        if (cfg.michell()) {
            CHECK(rep.two_point_checked);
            CHECK(rep.two_point_pairs == 10000);
            CHECK(rep.two_point_max_excess <= 1e-9);
        }
        // q lies in the range of sigma
        for (size_t e = 0; e < fem.sigma_hat.size(); ++e) {
            const auto sp = spectral(fem.sigma_hat[e]);
            const double scale = std::max(std::abs(sp.lI), 1e-300);
            if (sp.lII < 1e-6 * scale)
                CHECK(std::abs(sp.eII.dot(fem.q_hat[e])) <= 1e-4 * (fem.q_hat[e].norm() + 1e-8) + 1e-6);
        }
        // mass identity of the thickness
        REQUIRE(res.has_design);
        CHECK(res.design.mass == doctest::Approx(cfg.V0).epsilon(1e-6));
    }
}

TEST_CASE("a feasible but suboptimal pair leaves condition (i) positive")
{
    const SolveResult res = solve_problem(point_problem(6, 0.2));
    REQUIRE(res.sol.status == SolveStatus::Optimal);
    const Mesh& mesh = res.mesh;
    const int m = mesh.num_interior();
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    // zero displacements are admissible but carry no work against the stresses
    const FemSolution sub = fem_from_fields(mesh, res.mat, res.fem.f, z, z, z, res.fem.r0, res.fem.tau, false);
    const OptimalityReport rep = verify_optimality(sub, mesh, res.mat);
    CHECK(rep.cond_i > 0.1 * res.fem.Z_h);
    CHECK(rep.value_gap > 0.1 * res.fem.Z_h);
    CHECK(rep.membership_failures == 0);

    // half the optimal displacements: still admissible, still suboptimal
    const FemSolution half = fem_from_fields(mesh, res.mat, res.fem.f, 0.5 * res.fem.u1, 0.5 * res.fem.u2,
                                             0.5 * res.fem.w, res.fem.r0, res.fem.tau, false);
    CHECK(verify_optimality(half, mesh, res.mat).cond_i > 1e-3 * res.fem.Z_h);
}

TEST_CASE("thickness examples")
{
    const Mesh mesh = build_mesh(2.0, 4, MeshPattern::UniformSENW);
    const Materiald mat = build_material(1.0, 0.0);
    const int ne = mesh.num_elements();
    // uniform energy: all r0 equal with tau33 = r0
    std::vector<Sym3d> tau(ne, tau_of(Sym2d(1, 1, 0), Vec2d::Zero(), 0.0));
    std::vector<double> r0(ne, 0.3);
    for (auto& t : tau)
        t(2) = 0.3;
    const FemSolution fem = synthetic(mesh, mat, tau, r0);
    const Design d = thickness(fem, 1.5);
    for (double b : d.b_raw)
        CHECK(b == doctest::Approx(1.5 / 4.0).epsilon(1e-14));
    CHECK(d.mass == doctest::Approx(1.5).epsilon(1e-14));
    const Design d2 = thickness(fem, 3.0);
    for (int e = 0; e < ne; ++e)
        CHECK(d2.b_raw[e] == doctest::Approx(2.0 * d.b_raw[e]).epsilon(1e-15));
    CHECK_THROWS_AS(thickness(fem, 0.0), std::domain_error);
}

TEST_CASE("pair averaging and trimming")
{
    const Mesh mesh = build_mesh(1.0, 2, MeshPattern::UniformSENW);
    Design d;
    d.b_raw = {2, 4, 1, 1, 0, 6, 5, 3};
    average_pairs(d, mesh);
    const std::vector<double> expect = {3, 3, 1, 1, 3, 3, 4, 4};
    CHECK(d.b_avg == expect);
    double mr = 0.0, ma = 0.0;
    for (int e = 0; e < 8; ++e) {
        mr += d.b_raw[e] * mesh.areas[e];
        ma += d.b_avg[e] * mesh.areas[e];
    }
    CHECK(ma == mr);
    const std::vector<double> once = d.b_avg;
    d.b_raw = once;
    average_pairs(d, mesh);
    CHECK(d.b_avg == once);

    trim(d, 4.0);
    CHECK(d.b_trim == d.b_avg);
    trim(d, 2.0);
    for (double b : d.b_trim)
        CHECK(b <= 2.0);
    CHECK(d.b_trim[2] == 1.0);
    const std::vector<double> trimmed = d.b_trim;
    d.b_avg = trimmed;
    trim(d, 2.0);
    CHECK(d.b_trim == trimmed);
    CHECK_THROWS_AS(trim(d, 0.0), std::domain_error);

    Design c;
    c.b_raw.assign(8, 0.7);
    average_pairs(c, mesh);
    CHECK(c.b_avg == c.b_raw);

    // on the right triangle the diagonal cells hold one element and are left alone
    const Mesh tri = build_mesh(1.0, 2, MeshPattern::UniformSENW, DomainShape::RightTriangle);
    Design t;
    t.b_raw = {1, 2, 5, 7};
    average_pairs(t, tri);
    CHECK(t.b_avg == std::vector<double>{1.5, 1.5, 5, 7});
}

TEST_CASE("compliance examples")
{
    CHECK(compliance(0.0, 1.0) == 0.0);
    CHECK(compliance(2.0, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
    Gen g(71);
    for (int k = 0; k < 100; ++k) {
        const double Z = g.uniform(0.01, 5.0), V0 = g.uniform(0.1, 4.0), alpha = g.uniform(0.1, 10.0);
        CHECK(compliance(alpha * Z, V0) == doctest::Approx(std::pow(alpha, 4.0 / 3.0) * compliance(Z, V0)).epsilon(1e-12));
    }
}

TEST_CASE("optimal scaling")
{
    ProblemConfig cfg = mixed_problem(6, 0.1);
    SolveResult res = solve_problem(cfg);
    REQUIRE(res.sol.status == SolveStatus::Optimal);
    const FemSolution& fem = res.fem;

    Design unit = thickness(fem, fem.Z_h / 2.0);
    scale_optimal(unit, fem, res.mat);
    CHECK((unit.u1_check - fem.u1).norm() <= 1e-14 * (1.0 + fem.u1.norm()));
    CHECK((unit.w_check - fem.w).norm() <= 1e-14 * (1.0 + fem.w.norm()));
    for (size_t e = 0; e < fem.sigma_hat.size(); ++e) {
        if (unit.is_void[e])
            continue;
        const double r = rho_polar(fem.sigma_hat[e], res.mat);
        CHECK(unit.mu_check[e] == doctest::Approx(r).epsilon(1e-12));
        CHECK((unit.sigma_check[e] * r - fem.sigma_hat[e]).norm() <= 1e-12 * fem.sigma_hat[e].norm());
    }

    // the scaled membrane force stays self-equilibrated and the transverse flux balances f
    for (double V0 : {0.3, 1.0, 7.0}) {
        Design d = thickness(fem, V0);
        scale_optimal(d, fem, res.mat);
        const ConeProgram& p = res.assembled.program;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(p.num_vars());
        for (size_t e = 0; e < fem.sigma_hat.size(); ++e) {
            const double s = fem.areas[e] * d.mu_check[e];
            const int t = p.layout.tau[e];
            x(t) = s * d.sigma_check[e](0);
            x(t + 1) = s * d.sigma_check[e](1);
            x(t + 3) = s * d.sigma_check[e](2);
            x(t + 4) = s * d.q_check[e](0);
            x(t + 5) = s * d.q_check[e](1);
        }
        const Eigen::VectorXd r = p.A * x;
        const int m = p.layout.m;
        const double scale = std::cbrt(2.0 * V0 / fem.Z_h);
        CHECK(r.head(2 * m).cwiseAbs().maxCoeff() <= 1e-7 * scale);
        CHECK((r.segment(p.layout.row_w, m) - fem.f).cwiseAbs().maxCoeff() <= 1e-7);
        CHECK(d.w_check.dot(fem.f) >= 0.0);
    }
}

TEST_CASE("fibrous Hooke field")
{
    const Mesh mesh = build_mesh(1.0, 2, MeshPattern::UniformSENW);
    const Materiald mi = build_michell(1.0);
    const int ne = mesh.num_elements();
    std::vector<Sym3d> tau(ne, Sym3d::Zero());
    std::vector<double> r0(ne, 0.0);
    tau[0] = tau_of(Sym2d(0.7, 0.3, 0.0) * 2.0, Vec2d::Zero(), 0.0) * mesh.areas[0];
    tau[1] = tau_of(Sym2d(1.0, 1.0, 0.0), Vec2d::Zero(), 0.0) * mesh.areas[1];
    tau[2] = tau_of(Sym2d(0.3, 0.7, 0.0), Vec2d::Zero(), 0.0) * mesh.areas[2];
    for (int e = 0; e < 3; ++e) {
        r0[e] = rho_polar(in_plane(tau[e]), mi);
        tau[e](2) = r0[e];
    }
    const FemSolution fem = synthetic(mesh, mi, tau, r0);
    const double Lambda0 = 2.5;
    const auto field = fmd_hooke_field(fem, mi, Lambda0);
    REQUIRE(field.size() == 3);
    CHECK(field[0].s_I == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(field[0].s_II == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(std::abs(std::abs(field[0].e_I(0)) - 1.0) <= 1e-14);
    CHECK(field[1].s_I == doctest::Approx(0.5));
    CHECK(field[1].s_II == doctest::Approx(0.5));
    CHECK(field[1].e_I == Vec2d::UnitX());
    CHECK(field[1].e_II == Vec2d::UnitY());
    CHECK(std::abs(std::abs(field[2].e_I(1)) - 1.0) <= 1e-14);
    double budget = 0.0;
    for (const auto& h : field)
        budget += h.density * mesh.areas[h.element];
    CHECK(budget == doctest::Approx(Lambda0).epsilon(1e-13));
    CHECK_THROWS_AS(fmd_hooke_field(fem, build_material(1.0, 0.0), Lambda0), std::logic_error);

    // on a solved Michell program the budget holds through equi-repartition
    const SolveResult res = solve_problem(point_problem(6, -1.0));
    REQUIRE(res.sol.status == SolveStatus::Optimal);
    double total = 0.0;
    for (const auto& h : fmd_hooke_field(res.fem, res.mat, 1.0)) {
        total += h.density * res.mesh.areas[h.element];
        CHECK(h.s_I + h.s_II == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(h.s_II >= -1e-8);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("CSV exports")
{
    const SolveResult res = solve_problem(point_problem(3, 0.0));
    std::ostringstream el, nd, du;
    write_element_csv(el, res.mesh, res.fem, res.design);
    write_node_csv(nd, res.mesh, res.fem);
    write_dual_csv(du, res.fem);
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    CHECK(lines(el.str()) == 1 + 18);
    CHECK(lines(nd.str()) == 1 + 16);
    CHECK(lines(du.str()) == 1 + 18);
    CHECK(el.str().rfind("elem_id,cx,cy,area,b_raw,b_avg,b_trim,s11,s22,s12,q1,q2\n", 0) == 0);
    CHECK(nd.str().rfind("node_id,x,y,interior,u1,u2,w\n", 0) == 0);
    CHECK(du.str().rfind("elem_id,r0,t11,t22,t33,t12,t13,t23\n", 0) == 0);
}
