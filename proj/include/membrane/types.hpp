#pragma once

#include <Eigen/Core>
#include <cmath>

namespace membrane {

// Symmetric 2x2 tensors are stored in the isometric coordinates
// (a11, a22, sqrt(2) a12), symmetric 3x3 tensors as
// (a11, a22, a33, sqrt(2) a12, sqrt(2) a13, sqrt(2) a23).
// With these coordinates the Euclidean dot product equals the Frobenius
// inner product of the matrices.
template <typename Scalar> using Sym2 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Sym3 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Sym2d = Sym2<double>;
using Sym3d = Sym3<double>;
using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;
using Mat3d = Mat3<double>;

template <typename Scalar>
Mat2<Scalar> to_matrix(const Sym2<Scalar>& a)
{
    const Scalar off = a(2) / std::sqrt(Scalar(2));
    Mat2<Scalar> m;
    m << a(0), off, off, a(1);
    return m;
}

template <typename Scalar>
Sym2<Scalar> to_sym2(const Mat2<Scalar>& m)
{
    return Sym2<Scalar>(m(0, 0), m(1, 1), std::sqrt(Scalar(2)) * Scalar(0.5) * (m(0, 1) + m(1, 0)));
}

template <typename Scalar>
Mat3<Scalar> to_matrix(const Sym3<Scalar>& a)
{
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    Mat3<Scalar> m;
    m << a(0), r * a(3), r * a(4),
         r * a(3), a(1), r * a(5),
         r * a(4), r * a(5), a(2);
    return m;
}

template <typename Scalar>
Sym3<Scalar> to_sym3(const Mat3<Scalar>& m)
{
    const Scalar s = std::sqrt(Scalar(2)) * Scalar(0.5);
    Sym3<Scalar> a;
    a << m(0, 0), m(1, 1), m(2, 2), s * (m(0, 1) + m(1, 0)), s * (m(0, 2) + m(2, 0)), s * (m(1, 2) + m(2, 1));
    return a;
}

// χ₂(v ⊗ v)
template <typename Scalar>
Sym2<Scalar> outer(const Vec2<Scalar>& v)
{
    return Sym2<Scalar>(v(0) * v(0), v(1) * v(1), std::sqrt(Scalar(2)) * v(0) * v(1));
}

// In-plane part (11, 22, 12) of a 3x3 tensor and its transverse column (13, 23).
template <typename Scalar>
Sym2<Scalar> in_plane(const Sym3<Scalar>& t)
{
    return Sym2<Scalar>(t(0), t(1), t(3));
}

template <typename Scalar>
Vec2<Scalar> transverse(const Sym3<Scalar>& t)
{
    return Vec2<Scalar>(t(4), t(5));
}

} // namespace membrane
