#pragma once

// Nesterov-Todd scalings and Jordan algebra for the cone blocks used by the
// interior-point solver. Each block stores its scaling W as a small dense
// matrix: lambda = W x = W^{-T} s.

#include "membrane/cone_program.hpp"

#include <Eigen/Core>

namespace membrane::detail {

using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
using BlockVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

struct BlockScaling {
    ConeKind kind = ConeKind::Quad;
    int size = 0;
    Block W;       // x -> scaled coordinates
    Block WinvT;   // s -> scaled coordinates
    Block H;       // W^T W
    BlockVec lambda;
};

// Identity element of the cone (zero for free/zero blocks).
BlockVec identity(ConeKind kind, int size);

// NT scaling at strictly interior x, s. Returns false if either point is not interior.
bool nt_scaling(ConeKind kind, const BlockVec& x, const BlockVec& s, BlockScaling& out);

// Jordan product u o v.
BlockVec jordan(ConeKind kind, const BlockVec& u, const BlockVec& v);

// Solves lambda o u = v for u, where lambda is the scaled point of the block.
BlockVec jordan_solve(const BlockScaling& sc, const BlockVec& v);

// Largest alpha with base + alpha d in the cone (base interior); +inf if unbounded.
double max_step(ConeKind kind, const BlockVec& base, const BlockVec& d);

// Signed distance-to-boundary measure: >= 0 iff v is in the cone.
double cone_margin(ConeKind kind, const BlockVec& v);

} // namespace membrane::detail
