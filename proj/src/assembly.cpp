#include "membrane/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace membrane {

GeometricOperators geometric_operators(const Mesh& mesh)
{
    const int ne = mesh.num_elements();
    const int m = mesh.num_interior();
    const double r2 = 1.0 / std::sqrt(2.0);
    std::vector<Eigen::Triplet<double>> t11, t22, t121, t122, td1, td2;
    for (int e = 0; e < ne; ++e) {
        const auto g = mesh.hat_gradients(e);
        for (int k = 0; k < 3; ++k) {
            const int j = mesh.interior_map[mesh.elements[e].v[k]];
            if (j < 0)
                continue;
            const double g1 = g(0, k), g2 = g(1, k);
            t11.emplace_back(e, j, g1);
            t22.emplace_back(e, j, g2);
            t121.emplace_back(e, j, r2 * g2);
            t122.emplace_back(e, j, r2 * g1);
            td1.emplace_back(e, j, g1);
            td2.emplace_back(e, j, g2);
        }
    }
    GeometricOperators ops;
    auto fill = [&](Eigen::SparseMatrix<double>& M, const std::vector<Eigen::Triplet<double>>& t) {
        M.resize(ne, m);
        M.setFromTriplets(t.begin(), t.end());
    };
    fill(ops.B11, t11);
    fill(ops.B22, t22);
    fill(ops.B12_1, t121);
    fill(ops.B12_2, t122);
    fill(ops.D1, td1);
    fill(ops.D2, td2);
    ops.f = Eigen::VectorXd::Zero(m);
    return ops;
}

void element_fields(const GeometricOperators& ops, const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                    const Eigen::VectorXd& w, std::vector<Sym2d>& xi, std::vector<Vec2d>& theta)
{
    const Eigen::VectorXd e11 = ops.B11 * u1;
    const Eigen::VectorXd e22 = ops.B22 * u2;
    const Eigen::VectorXd e12 = ops.B12_1 * u1 + ops.B12_2 * u2;
    const Eigen::VectorXd th1 = ops.D1 * w;
    const Eigen::VectorXd th2 = ops.D2 * w;
    const auto ne = e11.size();
    xi.resize(ne);
    theta.resize(ne);
    for (Eigen::Index e = 0; e < ne; ++e) {
        xi[e] = Sym2d(e11(e), e22(e), e12(e));
        theta[e] = Vec2d(th1(e), th2(e));
    }
}

AssembledProgram assemble_dual_program(const Mesh& mesh, const Materiald& mat, const Eigen::VectorXd& f, double V0)
{
    const int ne = mesh.num_elements();
    const int m = mesh.num_interior();
    if (f.size() != m)
        throw std::invalid_argument("load vector length differs from the interior node count");

    constexpr int per_elem = 11;
    const int nvars = per_elem * ne;
    const int row_coupling = 3 * m;
    const int nrows = row_coupling + 4 * ne;

    AssembledProgram out;
    ConeProgram& prog = out.program;
    MembraneLayout& lay = prog.layout;
    lay.num_elements = ne;
    lay.m = m;
    lay.michell = mat.michell();
    lay.row_u1 = 0;
    lay.row_u2 = m;
    lay.row_w = 2 * m;
    lay.row_coupling = row_coupling;
    lay.V0 = V0;
    lay.r0.resize(ne);
    lay.tau.resize(ne);
    lay.aux.resize(ne);
    lay.slack.assign(ne, -1);

    prog.c = Eigen::VectorXd::Zero(nvars);
    prog.b = Eigen::VectorXd::Zero(nrows);
    prog.b.segment(lay.row_w, m) = f;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(ne) * 40);
    const double r2 = 1.0 / std::sqrt(2.0);
    const double sE = std::sqrt(mat.E);

    for (int e = 0; e < ne; ++e) {
        const int base = per_elem * e;
        const int r0 = base;
        const int tau = base + 1;
        lay.r0[e] = r0;
        lay.tau[e] = tau;
        prog.c(r0) = 1.0;
        prog.c(tau + 2) = 1.0;
        prog.cones.push_back({ConeKind::Quad, r0, 1});
        prog.cones.push_back({ConeKind::Psd3, tau, 6});

        const int t11 = tau + 0, t22 = tau + 1, t12 = tau + 3, t13 = tau + 4, t23 = tau + 5;
        const auto g = mesh.hat_gradients(e);
        for (int k = 0; k < 3; ++k) {
            const int j = mesh.interior_map[mesh.elements[e].v[k]];
            if (j < 0)
                continue;
            const double g1 = g(0, k), g2 = g(1, k);
            trip.emplace_back(lay.row_u1 + j, t11, g1);
            trip.emplace_back(lay.row_u1 + j, t12, r2 * g2);
            trip.emplace_back(lay.row_u2 + j, t12, r2 * g1);
            trip.emplace_back(lay.row_u2 + j, t22, g2);
            trip.emplace_back(lay.row_w + j, t13, g1);
            trip.emplace_back(lay.row_w + j, t23, g2);
        }

        const int row = row_coupling + 4 * e;
        if (!mat.michell()) {
            const int aux = base + 7;
            lay.aux[e] = aux;
            prog.cones.push_back({ConeKind::Quad, aux, 4});
            // aux = blockdiag(1, M^T) (r0, t11, t22, t12)
            trip.emplace_back(row, aux, 1.0);
            trip.emplace_back(row, r0, -1.0);
            const int tin[3] = {t11, t22, t12};
            for (int i = 0; i < 3; ++i) {
                trip.emplace_back(row + 1 + i, aux + 1 + i, 1.0);
                for (int k = 0; k < 3; ++k) {
                    const double v = mat.M(k, i);
                    if (v != 0.0)
                        trip.emplace_back(row + 1 + i, tin[k], -v);
                }
            }
        } else {
            const int slack = base + 7;
            const int aux = base + 8;
            lay.slack[e] = slack;
            lay.aux[e] = aux;
            prog.cones.push_back({ConeKind::Quad, slack, 1});
            prog.cones.push_back({ConeKind::Quad, aux, 3});
            // sqrt(E) r0 - t11 - t22 - slack = 0
            trip.emplace_back(row, r0, sE);
            trip.emplace_back(row, t11, -1.0);
            trip.emplace_back(row, t22, -1.0);
            trip.emplace_back(row, slack, -1.0);
            // aux = (sqrt(E) r0, t11 - t22, sqrt(2) t12)
            trip.emplace_back(row + 1, aux, 1.0);
            trip.emplace_back(row + 1, r0, -sE);
            trip.emplace_back(row + 2, aux + 1, 1.0);
            trip.emplace_back(row + 2, t11, -1.0);
            trip.emplace_back(row + 2, t22, 1.0);
            trip.emplace_back(row + 3, aux + 2, 1.0);
            trip.emplace_back(row + 3, t12, -std::sqrt(2.0));
        }
    }
    prog.A.resize(nrows, nvars);
    prog.A.setFromTriplets(trip.begin(), trip.end());

    // A loaded interior node always has incident elements on a valid mesh;
    // the flag guards hand-built inputs.
    std::vector<char> touched(m, 0);
    for (const auto& t : trip)
        if (t.row() >= lay.row_w && t.row() < lay.row_w + m && t.value() != 0.0)
            touched[t.row() - lay.row_w] = 1;
    for (int j = 0; j < m; ++j)
        if (f(j) != 0.0 && !touched[j])
            out.infeasible = true;
    validate(prog);
    return out;
}

} // namespace membrane
