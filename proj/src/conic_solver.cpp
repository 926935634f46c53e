#include "membrane/conic_solver.hpp"

#include "cones.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace membrane {

std::string to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::NumericalFailure: return "numerical_failure";
    case SolveStatus::Infeasible: return "infeasible";
    }
    return "?";
}

double min_cone_margin(const ConeProgram& prog, const Eigen::VectorXd& v, bool dual)
{
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& blk : prog.cones) {
        const detail::BlockVec b = v.segment(blk.start, blk.size);
        ConeKind kind = blk.kind;
        if (dual && kind == ConeKind::Free)
            kind = ConeKind::Zero;
        else if (dual && kind == ConeKind::Zero)
            kind = ConeKind::Free;
        const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
        lo = std::min(lo, detail::cone_margin(kind, b) / scale);
    }
    return prog.cones.empty() ? 0.0 : lo;
}

namespace {

using detail::BlockScaling;
using detail::BlockVec;
using SpMat = Eigen::SparseMatrix<double>;

struct Iterate {
    Eigen::VectorXd x, y, s;
    double tau = 1.0, kappa = 1.0;
};

// Quasi-definite system in NT-scaled coordinates,
//   [[-D, B^T], [B, 0]] with B = A W^{-1},
// where D is the identity on cone variables and zero on free ones. Zero-cone
// variables are eliminated. A small diagonal regularization is applied to the
// factored matrix and removed again by iterative refinement.
class KktSystem {
public:
    KktSystem(const ConeProgram& prog, int refine_steps)
        : prog_(prog), refine_steps_(refine_steps)
    {
        const int n = prog.num_vars();
        kkt_index_.assign(n, -1);
        int nx = 0;
        for (const auto& blk : prog.cones) {
            if (blk.kind == ConeKind::Zero)
                continue;
            for (int k = 0; k < blk.size; ++k)
                kkt_index_[blk.start + k] = nx++;
        }
        nx_ = nx;
        nrows_ = prog.num_rows();

        // Dense row footprint of A over every block.
        const SpMat& A = prog.A;
        blocks_.resize(prog.cones.size());
        std::vector<Eigen::Triplet<double>> bt;
        for (size_t b = 0; b < prog.cones.size(); ++b) {
            const auto& blk = prog.cones[b];
            if (blk.kind == ConeKind::Zero)
                continue;
            BlockRows& br = blocks_[b];
            for (int k = 0; k < blk.size; ++k)
                for (SpMat::InnerIterator it(A, blk.start + k); it; ++it)
                    br.rows.push_back(static_cast<int>(it.row()));
            std::sort(br.rows.begin(), br.rows.end());
            br.rows.erase(std::unique(br.rows.begin(), br.rows.end()), br.rows.end());
            br.vals = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(br.rows.size()), blk.size);
            for (int k = 0; k < blk.size; ++k)
                for (SpMat::InnerIterator it(A, blk.start + k); it; ++it) {
                    const auto pos = std::lower_bound(br.rows.begin(), br.rows.end(), static_cast<int>(it.row()));
                    br.vals(pos - br.rows.begin(), k) += it.value();
                }
            const int s0 = kkt_index_[blk.start];
            for (int k = 0; k < blk.size; ++k)
                for (int r : br.rows)
                    bt.emplace_back(r, s0 + k, 1.0);
        }
        B_.resize(nrows_, nx_);
        B_.setFromTriplets(bt.begin(), bt.end());
        B_.makeCompressed();

        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < nx_; ++i)
            trip.emplace_back(i, i, 1.0);
        for (int k = 0; k < B_.outerSize(); ++k)
            for (SpMat::InnerIterator it(B_, k); it; ++it)
                trip.emplace_back(nx_ + it.row(), it.col(), 1.0);
        for (int i = 0; i < nrows_; ++i)
            trip.emplace_back(nx_ + i, nx_ + i, 1.0);
        K_.resize(nx_ + nrows_, nx_ + nrows_);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();

        // B and the lower-left block of K share the same column ordering.
        kpos_.resize(static_cast<size_t>(B_.nonZeros()));
        for (int k = 0; k < B_.outerSize(); ++k)
            for (SpMat::InnerIterator it(B_, k); it; ++it)
                kpos_[static_cast<size_t>(&it.value() - B_.valuePtr())] = position(nx_ + static_cast<int>(it.row()), k);
        diag_.resize(nx_ + nrows_);
        for (int i = 0; i < nx_ + nrows_; ++i)
            diag_[i] = position(i, i);
        dscale_ = Eigen::VectorXd::Zero(nx_);
        for (const auto& blk : prog.cones)
            if (blk.kind != ConeKind::Zero && blk.kind != ConeKind::Free)
                dscale_.segment(kkt_index_[blk.start], blk.size).setOnes();
        ldlt_.analyzePattern(K_);
    }

    int nx() const { return nx_; }
    const std::vector<int>& kkt_index() const { return kkt_index_; }

    bool factor(const std::vector<BlockScaling>& sc, double reg)
    {
        for (size_t b = 0; b < prog_.cones.size(); ++b) {
            const auto& blk = prog_.cones[b];
            if (blk.kind == ConeKind::Zero)
                continue;
            const BlockRows& br = blocks_[b];
            Eigen::MatrixXd scaled;
            if (blk.kind == ConeKind::Free)
                scaled = br.vals;
            else
                scaled = br.vals * sc[b].WinvT.transpose();
            const int s0 = kkt_index_[blk.start];
            for (int k = 0; k < blk.size; ++k) {
                double* col = B_.valuePtr() + B_.outerIndexPtr()[s0 + k];
                for (size_t r = 0; r < br.rows.size(); ++r)
                    col[r] = scaled(static_cast<Eigen::Index>(r), k);
            }
        }
        Bt_ = B_.transpose();
        double* val = K_.valuePtr();
        for (Eigen::Index i = 0; i < B_.nonZeros(); ++i)
            val[kpos_[static_cast<size_t>(i)]] = B_.valuePtr()[i];
        for (int i = 0; i < nx_; ++i)
            val[diag_[i]] = -(dscale_(i) + reg);
        for (int i = 0; i < nrows_; ++i)
            val[diag_[nx_ + i]] = reg;
        ldlt_.factorize(K_);
        return ldlt_.info() == Eigen::Success;
    }

    // Solves the unregularized system, refining while the residual decreases.
    void solve(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, Eigen::VectorXd& dx, Eigen::VectorXd& dy) const
    {
        Eigen::VectorXd rhs(nx_ + nrows_);
        rhs.head(nx_) = rx;
        rhs.tail(nrows_) = ry;
        Eigen::VectorXd sol = ldlt_.solve(rhs);
        Eigen::VectorXd res = rhs - apply(sol);
        double rn = res.lpNorm<Eigen::Infinity>();
        const double target = 1e-15 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
        for (int k = 0; k < refine_steps_ && rn > target; ++k) {
            const Eigen::VectorXd cand = sol + ldlt_.solve(res);
            Eigen::VectorXd cres = rhs - apply(cand);
            const double cn = cres.lpNorm<Eigen::Infinity>();
            if (!(cn < rn))
                break;
            sol = cand;
            res = std::move(cres);
            rn = cn;
        }
        dx = sol.head(nx_);
        dy = sol.tail(nrows_);
    }

    // Product with [[-D, B^T], [B, 0]].
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const
    {
        Eigen::VectorXd out(nx_ + nrows_);
        out.head(nx_) = Bt_ * v.tail(nrows_) - dscale_.cwiseProduct(v.head(nx_));
        out.tail(nrows_) = B_ * v.head(nx_);
        return out;
    }

private:
    struct BlockRows {
        std::vector<int> rows;
        Eigen::MatrixXd vals;
    };

    int position(int row, int col) const
    {
        const int* inner = K_.innerIndexPtr();
        const int* outer = K_.outerIndexPtr();
        const int* lo = inner + outer[col];
        const int* hi = inner + outer[col + 1];
        const int* it = std::lower_bound(lo, hi, row);
        return static_cast<int>(it - inner);
    }

    const ConeProgram& prog_;
    int refine_steps_;
    std::vector<int> kkt_index_;
    int nx_ = 0, nrows_ = 0;
    std::vector<BlockRows> blocks_;
    SpMat B_, Bt_, K_;
    std::vector<int> kpos_, diag_;
    Eigen::VectorXd dscale_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

double inf_norm(const Eigen::VectorXd& v)
{
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

} // namespace

ConicSolution solve(const ConeProgram& prog, const SolverOptions& opts)
{
    validate(prog);
    const int n = prog.num_vars();
    const int mr = prog.num_rows();
    const Eigen::VectorXd& c = prog.c;
    const Eigen::VectorXd& b = prog.b;
    const SpMat& A = prog.A;
    const SpMat At = A.transpose();
    const int degree = cone_degree(prog);
    const size_t nb = prog.cones.size();

    ConicSolution out;
    KktSystem kkt(prog, opts.refine_steps);
    const auto& kidx = kkt.kkt_index();
    const int nx = kkt.nx();

    auto gather = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd r(nx);
        for (int i = 0; i < n; ++i)
            if (kidx[i] >= 0)
                r(kidx[i]) = full(i);
        return r;
    };
    auto scatter = [&](const Eigen::VectorXd& act) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i)
            if (kidx[i] >= 0)
                r(i) = act(kidx[i]);
        return r;
    };

    Iterate it;
    it.x = Eigen::VectorXd::Zero(n);
    it.s = Eigen::VectorXd::Zero(n);
    it.y = Eigen::VectorXd::Zero(mr);
    for (const auto& blk : prog.cones) {
        it.x.segment(blk.start, blk.size) = detail::identity(blk.kind, blk.size);
        it.s.segment(blk.start, blk.size) = detail::identity(blk.kind, blk.size);
    }

    const double bnorm = std::max(1.0, inf_norm(b));
    const double cnorm = std::max(1.0, inf_norm(c));
    std::vector<BlockScaling> sc(nb);

    auto set_solution = [&](const Iterate& cur, SolveStatus st) {
        out.status = st;
        out.x = cur.x / cur.tau;
        out.y = cur.y / cur.tau;
        out.s = cur.s / cur.tau;
    };

    Iterate best = it;
    double best_merit = std::numeric_limits<double>::infinity();
    int stalls = 0;

    if (opts.log)
        *opts.log << "iter        pobj          dobj        rel_gap       pres         dres        step\n";

    bool has_zero = false;
    for (const auto& blk : prog.cones)
        has_zero = has_zero || blk.kind == ConeKind::Zero;

    for (int iter = 0;; ++iter) {
        const Eigen::VectorXd Ax = A * it.x;
        const Eigen::VectorXd Aty = At * it.y;
        const Eigen::VectorXd rp = b * it.tau - Ax;
        const Eigen::VectorXd rd = c * it.tau - Aty - it.s;
        const double cx = c.dot(it.x), by = b.dot(it.y);
        const double rg = it.kappa + cx - by;
        const double xs = it.x.dot(it.s);
        const double mu = (xs + it.tau * it.kappa) / (degree + 1);

        const double pobj = cx / it.tau, dobj = by / it.tau;
        const double pres = inf_norm(rp) / it.tau / bnorm;
        const double dres = inf_norm(rd) / it.tau / cnorm;
        const double gap = xs / (it.tau * it.tau);
        const double rel_gap = gap / std::max(1.0, std::abs(pobj));
        const double obj_gap = std::abs(pobj - dobj) / std::max(1.0, std::abs(pobj));

        out.iterations = iter;
        out.primal_res = pres;
        out.dual_res = dres;
        out.rel_gap = rel_gap;
        out.primal_obj = pobj;
        out.dual_obj = dobj;

        const double merit = std::max({pres / opts.feas_tol, dres / opts.feas_tol, rel_gap / opts.gap_tol, obj_gap / opts.gap_tol});
        if (merit < best_merit) {
            best_merit = merit;
            best = it;
        }

        if (pres <= opts.feas_tol && dres <= opts.feas_tol && rel_gap <= opts.gap_tol && obj_gap <= opts.gap_tol) {
            set_solution(it, SolveStatus::Optimal);
            out.message = "converged";
            return out;
        }

        // Infeasibility certificates of the embedding.
        if (by > 0.0) {
            const double r = inf_norm(Aty + it.s) / by;
            if (r <= opts.feas_tol && it.tau < 1e-6 * std::max(1.0, it.kappa)) {
                out.status = SolveStatus::Infeasible;
                out.x = it.x;
                out.y = it.y / by;
                out.s = it.s / by;
                out.message = "primal infeasible";
                return out;
            }
        }
        if (cx < 0.0) {
            const double r = inf_norm(Ax) / -cx;
            if (r <= opts.feas_tol && it.tau < 1e-6 * std::max(1.0, it.kappa)) {
                out.status = SolveStatus::Infeasible;
                out.x = it.x / -cx;
                out.y = it.y;
                out.s = it.s;
                out.message = "dual infeasible";
                return out;
            }
        }

        if (iter >= opts.max_iter) {
            set_solution(best, SolveStatus::MaxIter);
            out.message = "iteration limit";
            return out;
        }

        bool ok = true;
        for (size_t k = 0; k < nb && ok; ++k) {
            const auto& blk = prog.cones[k];
            if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                continue;
            ok = detail::nt_scaling(blk.kind, it.x.segment(blk.start, blk.size), it.s.segment(blk.start, blk.size), sc[k]);
        }
        // A pivot lost to rounding is retried with a stronger regularization;
        // refinement works against the unregularized operator either way.
        bool factored = false;
        for (double reg = opts.regularization; ok && !factored && reg <= 1e-4; reg *= 100.0)
            factored = kkt.factor(sc, reg);
        if (!ok || !factored) {
            set_solution(best, SolveStatus::NumericalFailure);
            out.message = ok ? "KKT factorization failed" : "iterate left the cone";
            return out;
        }

        // Moves a dual-side vector into scaled coordinates, and a scaled primal
        // vector back to the original ones.
        auto scale_dual = [&](const Eigen::VectorXd& full) {
            Eigen::VectorXd r = gather(full);
            for (size_t k = 0; k < nb; ++k) {
                const auto& blk = prog.cones[k];
                if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                    continue;
                const int s0 = kidx[blk.start];
                r.segment(s0, blk.size) = sc[k].WinvT * BlockVec(r.segment(s0, blk.size));
            }
            return r;
        };
        auto unscale_primal = [&](const Eigen::VectorXd& act) {
            Eigen::VectorXd r = scatter(act);
            for (size_t k = 0; k < nb; ++k) {
                const auto& blk = prog.cones[k];
                if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                    continue;
                r.segment(blk.start, blk.size) = sc[k].WinvT.transpose() * BlockVec(r.segment(blk.start, blk.size));
            }
            return r;
        };

        Eigen::VectorXd p1x, p1y;
        kkt.solve(scale_dual(c), b, p1x, p1y);
        const Eigen::VectorXd p1xf = unscale_primal(p1x);
        const double denom_base = -c.dot(p1xf) + b.dot(p1y);

        // Direction for a complementarity target r_c (per block) and r_ctau.
        // dxs and dss hold the cone-block steps in scaled coordinates.
        struct Direction {
            Eigen::VectorXd dx, dy, ds, dxs, dss;
            double dtau = 0.0, dkappa = 0.0;
        };
        auto direction = [&](double eta, const std::vector<BlockVec>& rc, double rctau) {
            std::vector<BlockVec> xi(nb);
            Eigen::VectorXd rhs_x = scale_dual(eta * rd);
            for (size_t k = 0; k < nb; ++k) {
                const auto& blk = prog.cones[k];
                if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                    continue;
                xi[k] = detail::jordan_solve(sc[k], rc[k]);
                rhs_x.segment(kidx[blk.start], blk.size) -= xi[k];
            }
            Eigen::VectorXd p2x, p2y;
            kkt.solve(rhs_x, eta * rp, p2x, p2y);
            Direction d;
            const double num = eta * rg + c.dot(unscale_primal(p2x)) - b.dot(p2y) + rctau / it.tau;
            d.dtau = num / (denom_base + it.kappa / it.tau);
            d.dxs = p2x + d.dtau * p1x;
            d.dx = unscale_primal(d.dxs);
            d.dy = p2y + d.dtau * p1y;
            // ds from the dual residual row keeps that residual exact; solve
            // errors then only show up in the scaled complementarity.
            const Eigen::VectorXd aty = At * d.dy;
            d.ds = eta * rd + d.dtau * c - aty;
            d.dss = Eigen::VectorXd::Zero(nx);
            for (size_t k = 0; k < nb; ++k) {
                const auto& blk = prog.cones[k];
                if (blk.kind == ConeKind::Free)
                    d.ds.segment(blk.start, blk.size).setZero();
                if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                    continue;
                d.dss.segment(kidx[blk.start], blk.size) = sc[k].WinvT * BlockVec(d.ds.segment(blk.start, blk.size));
            }
            d.dkappa = (rctau - it.kappa * d.dtau) / it.tau;
            return d;
        };

        auto step_length = [&](const Direction& d) {
            double alpha = std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < nb; ++k) {
                const auto& blk = prog.cones[k];
                if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                    continue;
                const int s0 = kidx[blk.start];
                alpha = std::min(alpha, detail::max_step(blk.kind, sc[k].lambda, d.dxs.segment(s0, blk.size)));
                alpha = std::min(alpha, detail::max_step(blk.kind, sc[k].lambda, d.dss.segment(s0, blk.size)));
            }
            if (d.dtau < 0.0)
                alpha = std::min(alpha, -it.tau / d.dtau);
            if (d.dkappa < 0.0)
                alpha = std::min(alpha, -it.kappa / d.dkappa);
            return alpha;
        };

        // Predictor.
        std::vector<BlockVec> rc(nb);
        for (size_t k = 0; k < nb; ++k) {
            const auto& blk = prog.cones[k];
            if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                continue;
            rc[k] = -detail::jordan(blk.kind, sc[k].lambda, sc[k].lambda);
        }
        const Direction aff = direction(1.0, rc, -it.tau * it.kappa);
        const double alpha_aff = std::min(1.0, step_length(aff));
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

        // Corrector.
        for (size_t k = 0; k < nb; ++k) {
            const auto& blk = prog.cones[k];
            if (blk.kind == ConeKind::Zero || blk.kind == ConeKind::Free)
                continue;
            const BlockVec wdx = aff.dxs.segment(kidx[blk.start], blk.size);
            const BlockVec wds = aff.dss.segment(kidx[blk.start], blk.size);
            rc[k] = -detail::jordan(blk.kind, sc[k].lambda, sc[k].lambda)
                    + sigma * mu * detail::identity(blk.kind, blk.size)
                    - detail::jordan(blk.kind, wds, wdx);
        }
        const double rctau = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
        const Direction dir = direction(1.0 - sigma, rc, rctau);
        const double alpha = std::min(1.0, opts.step_fraction * step_length(dir));

        if (opts.log) {
            char line[160];
            std::snprintf(line, sizeof line, "%4d %13.6e %13.6e %11.4e %11.4e %11.4e %8.5f\n", iter, pobj, dobj, rel_gap,
                          pres, dres, alpha);
            *opts.log << line << std::flush;
        }

        if (!(alpha > 1e-12)) {
            if (++stalls > 3) {
                set_solution(best, SolveStatus::NumericalFailure);
                out.message = "step length collapsed";
                return out;
            }
        } else {
            stalls = 0;
        }

        it.x += alpha * dir.dx;
        it.y += alpha * dir.dy;
        it.s += alpha * dir.ds;
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;
    }
}

} // namespace membrane
