#include "doctest.h"
#include "test_util.hpp"

#include "membrane/material.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

using namespace membrane;
using testing_util::Gen;

namespace {

// Plane-stress stiffness built from Lame constants acting on 2x2 tensors,
// then read off in isometric coordinates.
Mat3d stiffness_oracle(double E, double nu)
{
    const double mu = E / (2.0 * (1.0 + nu));
    const double lam = E * nu / (1.0 - nu * nu);
    Mat3d H;
    for (int k = 0; k < 3; ++k) {
        Sym2d e = Sym2d::Zero();
        e(k) = 1.0;
        const Mat2d eps = to_matrix(e);
        const Mat2d sig = lam * eps.trace() * Mat2d::Identity() + 2.0 * mu * eps;
        H.col(k) = to_sym2(sig);
    }
    return H;
}

Sym2d project_psd(const Sym2d& a)
{
    const auto s = spectral(a);
    return std::max(s.lI, 0.0) * outer(s.eI) + std::max(s.lII, 0.0) * outer(s.eII);
}

// min over PSD zeta of j(xi + zeta) = 1/2 <H (xi + zeta), xi + zeta> by projected gradient.
double j_plus_oracle(const Sym2d& xi, const Materiald& mat)
{
    Sym2d zeta = Sym2d::Zero();
    const double step = 1.0 / mat.H.norm();
    for (int it = 0; it < 20000; ++it) {
        const Sym2d g = mat.H * (xi + zeta);
        zeta = project_psd(zeta - step * g);
    }
    const Sym2d v = xi + zeta;
    return 0.5 * v.dot(mat.H * v);
}

Sym2d diag(double a, double b)
{
    return Sym2d(a, b, 0.0);
}

} // namespace

TEST_CASE("isotropic stiffness matches the Lame-constant oracle and its Cholesky factors")
{
    for (double nu : {0.0, 0.3, 0.5, -0.6, -0.95}) {
        for (double E : {1.0, 2.5}) {
            const Materiald m = build_material(E, nu);
            const Mat3d ref = stiffness_oracle(E, nu);
            CHECK((m.H - ref).norm() <= 1e-12 * ref.norm());
            CHECK((m.L * m.L.transpose() - m.H).norm() <= 1e-12 * m.H.norm());
            const Mat3d Hinv = m.H.inverse();
            CHECK((m.M * m.M.transpose() - Hinv).norm() <= 1e-12 * Hinv.norm());
            CHECK((m.M - m.L.inverse().transpose()).norm() <= 1e-12 * m.M.norm());
        }
    }
}

TEST_CASE("build_material examples and errors")
{
    const Materiald m0 = build_material(1.0, 0.0);
    CHECK((m0.H - Mat3d::Identity()).norm() == doctest::Approx(0.0));
    CHECK((m0.L - Mat3d::Identity()).norm() == doctest::Approx(0.0));
    CHECK((m0.M - Mat3d::Identity()).norm() == doctest::Approx(0.0));

    const Materiald m5 = build_material(1.0, 0.5);
    Mat3d ref;
    ref << 4.0 / 3.0, 2.0 / 3.0, 0.0, 2.0 / 3.0, 4.0 / 3.0, 0.0, 0.0, 0.0, 2.0 / 3.0;
    CHECK((m5.H - ref).norm() <= 1e-14);

    const Materiald mm = build_material(1.0, -1.0);
    CHECK(mm.michell());
    CHECK(mm.nu == -1.0);

    CHECK_THROWS_AS(build_material(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(build_material(1.0, -1.5), std::domain_error);
    CHECK_THROWS_AS(build_material(0.0, 0.2), std::domain_error);
    CHECK_THROWS_AS(build_michell(-1.0), std::domain_error);
}

TEST_CASE("gauge and polar examples")
{
    const Materiald iso = build_material(1.0, 0.0);
    const Materiald mi = build_michell(1.0);
    CHECK(rho(Sym2d::Zero().eval(), iso) == 0.0);
    CHECK(rho(diag(1, 1), iso) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(rho(diag(2, -1), mi) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(rho_polar(Sym2d::Zero().eval(), iso) == 0.0);
    CHECK(rho_polar(diag(1, 1), iso) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(rho_polar(diag(1, 1), mi) == doctest::Approx(2.0).epsilon(1e-14));

    CHECK(rho_plus(diag(-1, -2), iso) == 0.0);
    CHECK(rho_plus(diag(-1, -2), mi) == 0.0);
    CHECK(rho_plus(diag(1, -1), iso) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rho_plus(diag(2, 1), iso) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("rho_plus agrees with a projected-gradient minimization of j over PSD corrections")
{
    Gen g(7);
    for (double nu : {0.0, 0.3, -0.6}) {
        const Materiald m = build_material(1.0, nu);
        for (int k = 0; k < 40; ++k) {
            const Sym2d xi = g.sym2();
            const double ref = j_plus_oracle(xi, m);
            CHECK(j_plus(xi, m) == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
        }
    }
    const Materiald m0 = build_material(1.0, 0.0);
    CHECK(j_plus_oracle(diag(1, -1), m0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("relaxed stress examples and extremality")
{
    const Materiald iso = build_material(1.0, 0.0);
    CHECK((relaxed_stress(diag(1, 1), iso) - diag(1, 1)).norm() <= 1e-14);
    CHECK((relaxed_stress(diag(1, -1), iso) - diag(1, 0)).norm() <= 1e-14);
    CHECK(relaxed_stress(diag(-1, -2), iso).norm() == 0.0);
    CHECK_THROWS_AS(relaxed_stress(diag(1, 1), build_michell(1.0)), std::logic_error);

    Gen g(11);
    for (double nu : {0.0, 0.45, -0.7}) {
        const Materiald m = build_material(2.0, nu);
        for (int k = 0; k < 300; ++k) {
            const Sym2d xi = g.sym2();
            const Sym2d sig = relaxed_stress(xi, m);
            const auto s = spectral(sig);
            CHECK(s.lII >= -1e-12 * (1.0 + std::abs(s.lI)));
            const double lhs = xi.dot(sig);
            const double rhs = j_plus(xi, m) + j_plus_star(sig, m);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
        }
    }
}

TEST_CASE("Fenchel inequality, rho_plus <= rho and the zero set of rho_plus")
{
    Gen g(13);
    for (const Materiald& m : {build_material(1.0, 0.0), build_material(3.0, 0.4), build_material(1.0, -0.8),
                               build_michell(1.0), build_michell(4.0)}) {
        for (int k = 0; k < 1000; ++k) {
            const Sym2d xi = g.sym2();
            const Sym2d sig = g.sym2();
            CHECK(xi.dot(sig) <= rho(xi, m) * rho_polar(sig, m) * (1.0 + 1e-10) + 1e-300);
            CHECK(rho_plus(xi, m) <= rho(xi, m) * (1.0 + 1e-12));
            const auto s = spectral(xi);
            CHECK((rho_plus(xi, m) == 0.0) == (s.lI <= 1e-12));
        }
    }
}

TEST_CASE("isotropic gauges dominate the Michell gauge scaled by c1_equiv")
{
    Gen g(17);
    for (double nu : {0.0, 0.3, -0.5, -0.95}) {
        const Materiald m = build_material(2.0, nu);
        const Materiald mi = build_michell(2.0);
        CHECK(m.c1_equiv == doctest::Approx(std::sqrt(2.0)));
        for (int k = 0; k < 500; ++k) {
            const Sym2d xi = g.sym2();
            CHECK(m.c1_equiv / std::sqrt(m.E) * rho_plus(xi, mi) <= rho_plus(xi, m) * (1.0 + 1e-12));
            CHECK(rho(xi, mi) <= rho(xi, m) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("varrho_polar examples")
{
    const Materiald iso = build_material(1.0, 0.0);
    CHECK(varrho_polar(diag(1, 1), Vec2d(0, 0), iso) == doctest::Approx(std::sqrt(2.0)));
    CHECK(varrho_polar(diag(1, 1), Vec2d(1, 0), iso) == doctest::Approx(std::sqrt(2.0) + 0.5));
    CHECK(std::isinf(varrho_polar(diag(1, 0), Vec2d(0, 1), iso)));
    CHECK(std::isinf(varrho_polar(diag(1, -1), Vec2d(0, 0), iso)));
    CHECK(varrho_polar(diag(1, 0), Vec2d(2, 0), iso) == doctest::Approx(1.0 + 2.0));
}

TEST_CASE("schur_psd_check examples and agreement with a direct eigenvalue test")
{
    CHECK(schur_psd_check(diag(1, 1), Vec2d(1, 0), 0.5));
    CHECK_FALSE(schur_psd_check(diag(1, 1), Vec2d(1, 0), 0.4));
    CHECK(schur_psd_check(Sym2d::Zero().eval(), Vec2d::Zero().eval(), 0.0));

    Gen g(19);
    int agree = 0;
    for (int k = 0; k < 1000; ++k) {
        const Sym2d s = g.sym2();
        const Vec2d q = g.vec2();
        const double c = g.uniform(-0.5, 3.0);
        const double r = 1.0 / std::sqrt(2.0);
        Mat3d m;
        m << s(0), r * s(2), r * q(0), r * s(2), s(1), r * q(1), r * q(0), r * q(1), c;
        Eigen::SelfAdjointEigenSolver<Mat3d> es(m);
        const double lo = es.eigenvalues()(0);
        // skip samples within rounding of the boundary
        if (std::abs(lo) < 1e-9)
            continue;
        agree += schur_psd_check(s, q, c) == (lo >= 0.0) ? 1 : 0;
        CHECK(schur_psd_check(s, q, c) == (lo >= 0.0));
    }
    CHECK(agree > 900);
}

TEST_CASE("membership_C examples")
{
    const Materiald iso = build_material(1.0, 0.0);
    CHECK(membership_C(Sym2d::Zero().eval(), Vec2d::Zero().eval(), iso));
    CHECK(membership_C(Sym2d::Zero().eval(), Vec2d(std::sqrt(2.0), 0.0), iso));
    CHECK_FALSE(membership_C(Sym2d::Zero().eval(), Vec2d(1.5, 0.0), iso));
    CHECK(membership_C((-1e6 * diag(1, 1)).eval(), Vec2d::Zero().eval(), iso));
    CHECK(membership_C((-1e6 * diag(1, 1)).eval(), Vec2d::Zero().eval(), build_michell(1.0)));
}

TEST_CASE("membership_C is witnessed by the lifted description")
{
    Gen g(23);
    for (const Materiald& m : {build_material(1.0, 0.0), build_material(1.0, 0.35), build_material(2.0, -0.7),
                               build_michell(1.0)}) {
        int members = 0;
        for (int k = 0; k < 600; ++k) {
            const Sym2d xi = g.sym2(0.6);
            const Vec2d th = g.vec2(0.8);
            if (!membership_C(xi, th, m))
                continue;
            ++members;
            const auto w = lifted_witness(xi, th, m);
            CHECK(rho(w.eps, m) <= 1.0 + 1e-9);
            Eigen::SelfAdjointEigenSolver<Mat3d> es(w.zeta);
            CHECK(es.eigenvalues()(0) >= -1e-9);
        }
        CHECK(members > 50);
    }
}
