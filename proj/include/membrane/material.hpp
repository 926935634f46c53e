#pragma once

#include "membrane/types.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace membrane {

enum class MaterialMode { Isotropic, Michell };

// Linear isotropic plane-stress law, or the spectral-norm (Michell) law that
// arises in the limit nu -> -1. The exponent of the potential is fixed at 2.
template <typename Scalar = double>
struct Material {
    Scalar E = Scalar(1);
    Scalar nu = Scalar(0);
    MaterialMode mode = MaterialMode::Isotropic;
    Mat3<Scalar> H = Mat3<Scalar>::Identity();
    Mat3<Scalar> L = Mat3<Scalar>::Identity();
    Mat3<Scalar> M = Mat3<Scalar>::Identity();
    Scalar c1_equiv = Scalar(1);

    bool michell() const { return mode == MaterialMode::Michell; }
};

using Materiald = Material<double>;

template <typename Scalar>
Material<Scalar> build_michell(Scalar E)
{
    if (!(E > Scalar(0)))
        throw std::domain_error("Young modulus must be positive");
    Material<Scalar> mat;
    mat.E = E;
    mat.nu = Scalar(-1);
    mat.mode = MaterialMode::Michell;
    mat.H.setZero();
    mat.L.setZero();
    mat.M.setZero();
    mat.c1_equiv = std::sqrt(E);
    return mat;
}

template <typename Scalar>
Material<Scalar> build_material(Scalar E, Scalar nu)
{
    if (!(E > Scalar(0)))
        throw std::domain_error("Young modulus must be positive");
    if (nu == Scalar(-1))
        return build_michell(E);
    if (!(nu > Scalar(-1) && nu < Scalar(1)))
        throw std::domain_error("Poisson ratio must lie in [-1, 1)");

    Material<Scalar> mat;
    mat.E = E;
    mat.nu = nu;
    mat.mode = MaterialMode::Isotropic;

    const Scalar d = Scalar(1) - nu * nu;
    mat.H << E / d, E * nu / d, Scalar(0),
             E * nu / d, E / d, Scalar(0),
             Scalar(0), Scalar(0), E / (Scalar(1) + nu);

    const Scalar sE = std::sqrt(E);
    const Scalar sd = std::sqrt(d);
    mat.L << sE / sd, Scalar(0), Scalar(0),
             sE * nu / sd, sE, Scalar(0),
             Scalar(0), Scalar(0), sE / std::sqrt(Scalar(1) + nu);
    mat.M << sd / sE, -nu / sE, Scalar(0),
             Scalar(0), Scalar(1) / sE, Scalar(0),
             Scalar(0), Scalar(0), std::sqrt(Scalar(1) + nu) / sE;
    // min of rho over {max |lambda| = 1} is attained at lambda = (1, -nu).
    mat.c1_equiv = sE;
    return mat;
}

template <typename Scalar>
struct Spectral2 {
    Scalar lI, lII;   // lI >= lII
    Vec2<Scalar> eI, eII;
};

// Closed-form eigen-decomposition of a symmetric 2x2 tensor.
template <typename Scalar>
Spectral2<Scalar> spectral(const Sym2<Scalar>& a)
{
    const Scalar a11 = a(0), a22 = a(1), a12 = a(2) / std::sqrt(Scalar(2));
    const Scalar mean = Scalar(0.5) * (a11 + a22);
    const Scalar half = Scalar(0.5) * (a11 - a22);
    const Scalar r = std::hypot(half, a12);
    Spectral2<Scalar> s;
    s.lI = mean + r;
    s.lII = mean - r;
    if (r == Scalar(0)) {
        s.eI = Vec2<Scalar>(1, 0);
    } else {
        const Scalar phi = Scalar(0.5) * std::atan2(a12, half);
        s.eI = Vec2<Scalar>(std::cos(phi), std::sin(phi));
    }
    s.eII = Vec2<Scalar>(-s.eI(1), s.eI(0));
    return s;
}

template <typename Scalar>
Scalar rho(const Sym2<Scalar>& xi, const Material<Scalar>& mat)
{
    if (mat.michell()) {
        const auto s = spectral(xi);
        return std::sqrt(mat.E) * std::max(std::abs(s.lI), std::abs(s.lII));
    }
    return std::sqrt(std::max(Scalar(0), xi.dot(mat.H * xi)));
}

template <typename Scalar>
Scalar rho_polar(const Sym2<Scalar>& sigma, const Material<Scalar>& mat)
{
    if (mat.michell()) {
        const auto s = spectral(sigma);
        return (std::abs(s.lI) + std::abs(s.lII)) / std::sqrt(mat.E);
    }
    return (mat.M.transpose() * sigma).norm();
}

// Energy of the relaxed (wrinkling) potential j+ in eigen-coordinates.
template <typename Scalar>
Scalar j_plus(const Sym2<Scalar>& xi, const Material<Scalar>& mat)
{
    const auto s = spectral(xi);
    if (mat.michell()) {
        const Scalar l = std::max(s.lI, Scalar(0));
        return Scalar(0.5) * mat.E * l * l;
    }
    if (s.lI <= Scalar(0))
        return Scalar(0);
    const Scalar k = (Scalar(1) - mat.nu) / (Scalar(1) + mat.nu);
    if (s.lI + s.lII >= k * (s.lI - s.lII)) {
        const Scalar d = Scalar(1) - mat.nu * mat.nu;
        return Scalar(0.5) * mat.E / d * (s.lI * s.lI + s.lII * s.lII + Scalar(2) * mat.nu * s.lI * s.lII);
    }
    return Scalar(0.5) * mat.E * s.lI * s.lI;
}

// Conjugate of j+ on positive semi-definite stresses.
template <typename Scalar>
Scalar j_plus_star(const Sym2<Scalar>& sigma, const Material<Scalar>& mat)
{
    const Scalar r = rho_polar(sigma, mat);
    return Scalar(0.5) * r * r;
}

template <typename Scalar>
Scalar rho_plus(const Sym2<Scalar>& xi, const Material<Scalar>& mat)
{
    if (mat.michell()) {
        const auto s = spectral(xi);
        return std::sqrt(mat.E) * std::max(s.lI, Scalar(0));
    }
    return std::sqrt(Scalar(2) * j_plus(xi, mat));
}

template <typename Scalar>
Sym2<Scalar> relaxed_stress(const Sym2<Scalar>& xi, const Material<Scalar>& mat)
{
    if (mat.michell())
        throw std::logic_error("relaxed_stress is not single-valued for the Michell law");
    const auto s = spectral(xi);
    if (s.lI <= Scalar(0))
        return Sym2<Scalar>::Zero();
    const Scalar k = (Scalar(1) - mat.nu) / (Scalar(1) + mat.nu);
    if (s.lI + s.lII >= k * (s.lI - s.lII))
        return mat.H * xi;
    return mat.E * s.lI * outer(s.eI);
}

// Strain eps with rho(eps) = rho_plus(xi) and eps - xi positive semi-definite.
template <typename Scalar>
Sym2<Scalar> relaxed_strain(const Sym2<Scalar>& xi, const Material<Scalar>& mat)
{
    const auto s = spectral(xi);
    if (mat.michell()) {
        const Scalar l = std::max(s.lI, Scalar(0));
        return Sym2<Scalar>(l, l, Scalar(0));
    }
    if (s.lI <= Scalar(0))
        return Sym2<Scalar>::Zero();
    const Scalar k = (Scalar(1) - mat.nu) / (Scalar(1) + mat.nu);
    if (s.lI + s.lII >= k * (s.lI - s.lII))
        return xi;
    return s.lI * outer(s.eI) - mat.nu * s.lI * outer(s.eII);
}

template <typename Scalar>
constexpr Scalar infinite_value()
{
    return std::numeric_limits<Scalar>::infinity();
}

// Support function of the admissible strain set: rho0(sigma) + 1/2 <sigma^+ q, q>,
// infinite when sigma is not positive semi-definite or q leaves its image.
template <typename Scalar>
Scalar varrho_polar(const Sym2<Scalar>& sigma, const Vec2<Scalar>& q, const Material<Scalar>& mat)
{
    const auto s = spectral(sigma);
    const Scalar scale = std::max(std::abs(s.lI), std::abs(s.lII));
    const Scalar tol = Scalar(1e-10) * scale;
    if (s.lII < -tol)
        return infinite_value<Scalar>();
    const Scalar qn = q.norm();
    Scalar quad = Scalar(0);
    const Scalar lam[2] = {s.lI, s.lII};
    const Vec2<Scalar> vec[2] = {s.eI, s.eII};
    for (int i = 0; i < 2; ++i) {
        const Scalar c = vec[i].dot(q);
        if (lam[i] <= tol || scale == Scalar(0)) {
            if (std::abs(c) > Scalar(1e-10) * qn)
                return infinite_value<Scalar>();
        } else {
            quad += c * c / lam[i];
        }
    }
    return rho_polar(sigma, mat) + Scalar(0.5) * quad;
}

template <typename Scalar>
Mat3<Scalar> schur_block(const Sym2<Scalar>& sigma, const Vec2<Scalar>& q, Scalar c)
{
    const Mat2<Scalar> s = to_matrix(sigma);
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    Mat3<Scalar> m;
    m << s(0, 0), s(0, 1), r * q(0),
         s(1, 0), s(1, 1), r * q(1),
         r * q(0), r * q(1), c;
    return m;
}

// [[sigma, q/sqrt2], [q^T/sqrt2, c]] >= 0 up to a few ulps of the entries, so
// that boundary cases such as c = 1/2 <sigma^-1 q, q> count as semi-definite.
template <typename Scalar>
bool schur_psd_check(const Sym2<Scalar>& sigma, const Vec2<Scalar>& q, Scalar c)
{
    const Mat3<Scalar> m = schur_block(sigma, q, c);
    const Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
    const Scalar tol = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;
    Eigen::SelfAdjointEigenSolver<Mat3<Scalar>> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0) >= -tol;
}

template <typename Scalar>
bool membership_C(const Sym2<Scalar>& xi, const Vec2<Scalar>& theta, const Material<Scalar>& mat)
{
    const Sym2<Scalar> total = xi + Scalar(0.5) * outer(theta);
    return rho_plus(total, mat) <= Scalar(1) + Scalar(1e-12);
}

// Witness of the lifted description of the admissible set:
// [[xi, theta/sqrt2], [theta^T/sqrt2, 0]] + zeta = [[eps, 0], [0, 1]], zeta >= 0.
template <typename Scalar>
struct LiftedWitness {
    Sym2<Scalar> eps;
    Mat3<Scalar> zeta;
};

template <typename Scalar>
LiftedWitness<Scalar> lifted_witness(const Sym2<Scalar>& xi, const Vec2<Scalar>& theta, const Material<Scalar>& mat)
{
    const Sym2<Scalar> total = xi + Scalar(0.5) * outer(theta);
    LiftedWitness<Scalar> w;
    w.eps = relaxed_strain(total, mat);
    Mat3<Scalar> lhs = schur_block(xi, theta, Scalar(0));
    Mat3<Scalar> rhs = Mat3<Scalar>::Zero();
    rhs.template topLeftCorner<2, 2>() = to_matrix(w.eps);
    rhs(2, 2) = Scalar(1);
    w.zeta = rhs - lhs;
    return w;
}

} // namespace membrane
