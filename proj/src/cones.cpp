#include "cones.hpp"

#include "membrane/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace membrane::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat3d mat(const BlockVec& v)
{
    return to_matrix(Sym3d(v.head<6>()));
}

BlockVec svec(const Mat3d& m)
{
    return BlockVec(to_sym3(m));
}

double lorentz(const BlockVec& v)
{
    // factored to avoid cancellation near the boundary
    const double t = v.tail(v.size() - 1).norm();
    return (v(0) - t) * (v(0) + t);
}

double min_eigenvalue(const Mat3d& m)
{
    Eigen::SelfAdjointEigenSolver<Mat3d> es;
    es.computeDirect(m, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues()(0);
    // The closed form loses relative accuracy for clustered spectra.
    if (!std::isfinite(lo) || std::abs(lo) < 1e-6 * m.cwiseAbs().maxCoeff()) {
        es.compute(m, Eigen::EigenvaluesOnly);
        lo = es.eigenvalues()(0);
    }
    return lo;
}

} // namespace

BlockVec identity(ConeKind kind, int size)
{
    BlockVec e = BlockVec::Zero(size);
    if (kind == ConeKind::Quad)
        e(0) = 1.0;
    else if (kind == ConeKind::Psd3)
        e.head<3>().setOnes();
    return e;
}

bool nt_scaling(ConeKind kind, const BlockVec& x, const BlockVec& s, BlockScaling& out)
{
    const int d = static_cast<int>(x.size());
    out.kind = kind;
    out.size = d;
    if (kind == ConeKind::Quad) {
        if (d == 1) {
            if (!(x(0) > 0.0) || !(s(0) > 0.0))
                return false;
            const double w = std::sqrt(s(0) / x(0));
            out.W = Block::Constant(1, 1, w);
            out.WinvT = Block::Constant(1, 1, 1.0 / w);
            out.H = Block::Constant(1, 1, w * w);
            out.lambda = BlockVec::Constant(1, std::sqrt(x(0) * s(0)));
            return true;
        }
        const double xx = lorentz(x), ss = lorentz(s);
        if (!(x(0) > 0.0) || !(s(0) > 0.0) || !(xx > 0.0) || !(ss > 0.0))
            return false;
        const BlockVec xb = x / std::sqrt(xx);
        const BlockVec sb = s / std::sqrt(ss);
        const double gamma = std::sqrt(0.5 * (1.0 + xb.dot(sb)));
        BlockVec Jx = xb;
        Jx.tail(d - 1) *= -1.0;
        const BlockVec wb = (sb + Jx) / (2.0 * gamma);
        const double eta = std::pow(ss / xx, 0.25);
        Block J = Block::Identity(d, d);
        J.bottomRightCorner(d - 1, d - 1) *= -1.0;
        // W = eta (2 v v' - J) with v the half-way point between wb and e.
        BlockVec v = wb;
        v(0) += 1.0;
        v /= std::sqrt(2.0 * (wb(0) + 1.0));
        const Block Wb = 2.0 * v * v.transpose() - J;
        out.W = eta * Wb;
        out.WinvT = (J * Wb * J) / eta;
        out.H = out.W * out.W;
        out.lambda = out.W * x;
        return true;
    }
    if (kind == ConeKind::Psd3) {
        const Mat3d X = mat(x), S = mat(s);
        Eigen::LLT<Mat3d> lx(X), ls(S);
        if (lx.info() != Eigen::Success || ls.info() != Eigen::Success)
            return false;
        const Mat3d Lx = lx.matrixL();
        const Mat3d Ls = ls.matrixL();
        Eigen::JacobiSVD<Mat3d> svd(Ls.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::Vector3d sig = svd.singularValues();
        if (!(sig.minCoeff() > 0.0))
            return false;
        const Mat3d R = Lx * svd.matrixV() * sig.cwiseSqrt().cwiseInverse().asDiagonal();
        const Mat3d Rinv = R.inverse();
        out.W.resize(6, 6);
        out.WinvT.resize(6, 6);
        for (int k = 0; k < 6; ++k) {
            BlockVec ek = BlockVec::Zero(6);
            ek(k) = 1.0;
            const Mat3d E = mat(ek);
            out.W.col(k) = svec(Rinv * E * Rinv.transpose());
            out.WinvT.col(k) = svec(R.transpose() * E * R);
        }
        out.H = out.W.transpose() * out.W;
        out.lambda = BlockVec::Zero(6);
        out.lambda.head<3>() = sig;
        return true;
    }
    return false;
}

BlockVec jordan(ConeKind kind, const BlockVec& u, const BlockVec& v)
{
    if (kind == ConeKind::Quad) {
        const int d = static_cast<int>(u.size());
        BlockVec r(d);
        r(0) = u.dot(v);
        if (d > 1)
            r.tail(d - 1) = u(0) * v.tail(d - 1) + v(0) * u.tail(d - 1);
        return r;
    }
    if (kind == ConeKind::Psd3) {
        const Mat3d U = mat(u), V = mat(v);
        return svec(0.5 * (U * V + V * U));
    }
    return BlockVec::Zero(u.size());
}

BlockVec jordan_solve(const BlockScaling& sc, const BlockVec& v)
{
    const BlockVec& l = sc.lambda;
    if (sc.kind == ConeKind::Quad) {
        const int d = sc.size;
        if (d == 1)
            return BlockVec::Constant(1, v(0) / l(0));
        const double det = lorentz(l);
        BlockVec u(d);
        u(0) = (l(0) * v(0) - l.tail(d - 1).dot(v.tail(d - 1))) / det;
        u.tail(d - 1) = (v.tail(d - 1) - u(0) * l.tail(d - 1)) / l(0);
        return u;
    }
    if (sc.kind == ConeKind::Psd3) {
        const Mat3d V = mat(v);
        Mat3d U;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                U(i, j) = 2.0 * V(i, j) / (l(i) + l(j));
        return svec(U);
    }
    return BlockVec::Zero(v.size());
}

double max_step(ConeKind kind, const BlockVec& base, const BlockVec& d)
{
    if (kind == ConeKind::Quad) {
        const int n = static_cast<int>(base.size());
        if (n == 1)
            return d(0) < 0.0 ? -base(0) / d(0) : kInf;
        const double a = lorentz(d);
        const double b = base(0) * d(0) - base.tail(n - 1).dot(d.tail(n - 1));
        const double c = lorentz(base);
        // f(alpha) = a alpha^2 + 2 b alpha + c, f(0) = c > 0
        const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
        double best = kInf;
        if (std::abs(a) <= 1e-15 * scale) {
            if (b < 0.0)
                best = -c / (2.0 * b);
        } else {
            const double disc = b * b - a * c;
            if (disc >= 0.0) {
                const double q = -(b + std::copysign(std::sqrt(disc), b));
                const double r1 = q / a;
                const double r2 = q != 0.0 ? c / q : kInf;
                if (r1 > 0.0)
                    best = std::min(best, r1);
                if (r2 > 0.0)
                    best = std::min(best, r2);
            }
        }
        if (d(0) < 0.0)
            best = std::min(best, -base(0) / d(0));
        return best;
    }
    if (kind == ConeKind::Psd3) {
        Eigen::LLT<Mat3d> llt(mat(base));
        const Mat3d L = llt.matrixL();
        const Mat3d Linv = L.inverse();
        const Mat3d M = Linv * mat(d) * Linv.transpose();
        const double lo = min_eigenvalue(0.5 * (M + M.transpose()));
        return lo < 0.0 ? -1.0 / lo : kInf;
    }
    return kInf;
}

double cone_margin(ConeKind kind, const BlockVec& v)
{
    switch (kind) {
    case ConeKind::Quad:
        return v(0) - v.tail(v.size() - 1).norm();
    case ConeKind::Psd3:
        return min_eigenvalue(mat(v));
    case ConeKind::Free:
        return 0.0;
    case ConeKind::Zero:
        return -v.cwiseAbs().maxCoeff();
    }
    return 0.0;
}

} // namespace membrane::detail
