#include "membrane/strings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace membrane {

StringGrid make_grid(double a, int k)
{
    if (k < 1 || !(a > 0.0))
        throw std::domain_error("string grid needs k >= 1 and a > 0");
    StringGrid g;
    g.a = a;
    if (k == 1) {
        g.nodes.emplace_back(0.5 * a, 0.5 * a);
        g.interior.push_back(1);
        g.spacing = a;
        return g;
    }
    g.spacing = a / (k - 1);
    for (int i2 = 0; i2 < k; ++i2) {
        for (int i1 = 0; i1 < k; ++i1) {
            g.nodes.emplace_back(i1 * g.spacing, i2 * g.spacing);
            const bool bnd = i1 == 0 || i2 == 0 || i1 == k - 1 || i2 == k - 1;
            g.interior.push_back(bnd ? 0 : 1);
        }
    }
    return g;
}

namespace {

StringPair make_pair(const StringGrid& g, int i, int j)
{
    StringPair p;
    p.i = i;
    p.j = j;
    const Eigen::Vector2d d = g.nodes[i] - g.nodes[j];
    p.length = d.norm();
    p.dir = d / p.length;
    return p;
}

int find_node(const StringGrid& g, const Eigen::Vector2d& x, double tol)
{
    int best = -1;
    double bd = tol;
    for (size_t k = 0; k < g.nodes.size(); ++k) {
        const double d = (g.nodes[k] - x).norm();
        if (d <= bd) {
            bd = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

int nearest_node(const StringGrid& g, const Eigen::Vector2d& x)
{
    return find_node(g, x, std::numeric_limits<double>::infinity());
}

} // namespace

std::vector<StringPair> build_pairs(const StringGrid& grid, double max_length, size_t max_pairs)
{
    const size_t nn = grid.nodes.size();
    const size_t all = nn * (nn - (nn ? 1 : 0)) / 2;
    if (max_length <= 0.0 && all > max_pairs)
        throw std::length_error("pair count " + std::to_string(all) + " exceeds the budget; set a length filter");
    std::vector<StringPair> out;
    if (max_length <= 0.0)
        out.reserve(all);
    const double lim = max_length * (1.0 + 1e-12);
    for (size_t i = 0; i < nn; ++i) {
        for (size_t j = i + 1; j < nn; ++j) {
            if (max_length > 0.0 && (grid.nodes[i] - grid.nodes[j]).norm() > lim)
                continue;
            out.push_back(make_pair(grid, static_cast<int>(i), static_cast<int>(j)));
            if (out.size() > max_pairs)
                throw std::length_error("filtered pair count exceeds the budget");
        }
    }
    return out;
}

std::vector<StringPair> pairs_from_segments(const StringGrid& grid, const std::vector<std::array<Eigen::Vector2d, 2>>& segs)
{
    const double tol = 1e-9 * grid.a;
    std::vector<StringPair> out;
    for (const auto& s : segs) {
        const int i = find_node(grid, s[0], tol);
        const int j = find_node(grid, s[1], tol);
        if (i < 0 || j < 0)
            throw std::invalid_argument("candidate string end point is not a grid node");
        if (i == j)
            throw std::invalid_argument("candidate string connects a node to itself");
        out.push_back(make_pair(grid, i, j));
    }
    return out;
}

Eigen::VectorXd string_nodal_load(const StringGrid& grid, const LoadSpec& load, std::vector<std::string>* warnings)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.nodes.size()));
    auto warn = [&](const std::string& msg) {
        if (warnings)
            warnings->push_back(msg);
    };
    const double snap = std::max(1e-9 * grid.a, 1e-6 * grid.spacing);
    for (const auto& comp : load.components) {
        if (const auto* p = std::get_if<PointLoad>(&comp)) {
            const int k = find_node(grid, p->x, snap);
            if (k < 0)
                throw std::invalid_argument("string point load does not sit on a grid node");
            f(k) += p->P;
        } else if (const auto* l = std::get_if<LineLoad>(&comp)) {
            warn("line load lumped to the nearest string grid nodes");
            const double len = (l->p1 - l->p0).norm();
            const int pieces = std::max(1, static_cast<int>(std::ceil(8.0 * len / grid.spacing)));
            for (int s = 0; s < pieces; ++s) {
                const Eigen::Vector2d mid = l->p0 + (s + 0.5) / pieces * (l->p1 - l->p0);
                f(nearest_node(grid, mid)) += l->t * len / pieces;
            }
        } else if (const auto* pr = std::get_if<PressureLoad>(&comp)) {
            warn("pressure load lumped to the string grid nodes");
            if (!pr->region.empty())
                throw std::invalid_argument("string grids accept whole-domain pressure only");
            const double h = grid.spacing;
            for (size_t k = 0; k < grid.nodes.size(); ++k) {
                const auto& x = grid.nodes[k];
                const double wx = (x.x() <= 0.0 || x.x() >= grid.a) ? 0.5 : 1.0;
                const double wy = (x.y() <= 0.0 || x.y() >= grid.a) ? 0.5 : 1.0;
                f(static_cast<Eigen::Index>(k)) += pr->p * h * h * wx * wy;
            }
        }
    }
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        if (f(k) != 0.0 && !grid.interior[k]) {
            warn("load on a supported boundary node is ignored");
            f(k) = 0.0;
        }
    }
    return f;
}

StringProgram assemble_string_program(const StringGrid& grid, const std::vector<StringPair>& pairs,
                                      const Eigen::VectorXd& f)
{
    const int nn = static_cast<int>(grid.nodes.size());
    if (f.size() != nn)
        throw std::invalid_argument("string load vector must have one entry per grid node");
    StringProgram out;
    out.node_row.assign(nn, -1);
    int rows = 0;
    for (int k = 0; k < nn; ++k)
        if (grid.interior[k]) {
            out.node_row[k] = rows;
            rows += 3;
        }

    ConeProgram& prog = out.program;
    const int np = static_cast<int>(pairs.size());
    prog.c = Eigen::VectorXd::Zero(3 * np);
    prog.b = Eigen::VectorXd::Zero(rows);
    for (int k = 0; k < nn; ++k)
        if (out.node_row[k] >= 0)
            prog.b(out.node_row[k] + 2) = f(k);

    const double r2 = 1.0 / std::sqrt(2.0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(np) * 12);
    std::vector<char> touched(nn, 0);
    for (int p = 0; p < np; ++p) {
        const StringPair& s = pairs[p];
        const int v = 3 * p;
        prog.cones.push_back({ConeKind::Quad, v, 3});
        prog.c(v) = s.length * std::sqrt(2.0);
        // Pi = (v0 + v1)/sqrt2 enters in-plane balance, pi = v2 the transverse one.
        const int ends[2] = {s.i, s.j};
        const double sign[2] = {1.0, -1.0};
        for (int e = 0; e < 2; ++e) {
            const int row = out.node_row[ends[e]];
            if (row < 0)
                continue;
            touched[ends[e]] = 1;
            for (int d = 0; d < 2; ++d) {
                const double coef = sign[e] * s.dir(d) * r2;
                if (coef != 0.0) {
                    trip.emplace_back(row + d, v, coef);
                    trip.emplace_back(row + d, v + 1, coef);
                }
            }
            trip.emplace_back(row + 2, v + 2, sign[e]);
        }
    }
    prog.A.resize(rows, 3 * np);
    prog.A.setFromTriplets(trip.begin(), trip.end());
    for (int k = 0; k < nn; ++k)
        if (f(k) != 0.0 && out.node_row[k] >= 0 && !touched[k])
            out.infeasible = true;
    validate(prog);
    return out;
}

namespace {

StringSystem solve_once(const StringGrid& grid, const std::vector<StringPair>& pairs, const StringProgram& prog,
                        const Eigen::VectorXd& f, double V0, const SolverOptions& opts)
{
    StringSystem sys;
    sys.pairs = pairs;
    sys.V0 = V0;
    const int np = static_cast<int>(pairs.size());
    sys.Pi.assign(np, 0.0);
    sys.pi.assign(np, 0.0);
    sys.mu.assign(np, 0.0);
    if (prog.infeasible) {
        sys.status = SolveStatus::Infeasible;
        sys.solution.message = "a loaded node has no incident string";
        return sys;
    }
    sys.solution = solve(prog.program, opts);
    sys.status = sys.solution.status;
    const Eigen::VectorXd& x = sys.solution.x;
    const double r2 = 1.0 / std::sqrt(2.0);
    sys.Z_strings = 0.0;
    for (int p = 0; p < np; ++p) {
        sys.Pi[p] = r2 * (x(3 * p) + x(3 * p + 1));
        sys.pi[p] = x(3 * p + 2);
        sys.Z_strings += pairs[p].length * std::sqrt(2.0) * x(3 * p);
    }
    if (sys.Z_strings > 0.0)
        for (int p = 0; p < np; ++p)
            sys.mu[p] = 2.0 * V0 / sys.Z_strings * sys.Pi[p];
    return sys;
}

// Strings that carry positive tension in some in-plane equilibrium. The
// balance is homogeneous, so max sum(s) with s <= Pi, s <= 1 reaches s = 1 on
// exactly those strings.
std::vector<char> tension_capable(const StringGrid& grid, const std::vector<StringPair>& pairs,
                                  const StringProgram& sp, const SolverOptions& opts)
{
    const int np = static_cast<int>(pairs.size());
    int node_rows = 0;
    std::vector<int> row_of(grid.nodes.size(), -1);
    for (size_t k = 0; k < grid.nodes.size(); ++k)
        if (sp.node_row[k] >= 0) {
            row_of[k] = node_rows;
            node_rows += 2;
        }
    ConeProgram lp;
    // per pair: Pi, s, e (s + e = 1), g (Pi - s - g = 0)
    lp.c = Eigen::VectorXd::Zero(4 * np);
    lp.b = Eigen::VectorXd::Zero(node_rows + 2 * np);
    std::vector<Eigen::Triplet<double>> trip;
    for (int p = 0; p < np; ++p) {
        const int v = 4 * p;
        for (int k = 0; k < 4; ++k)
            lp.cones.push_back({ConeKind::Quad, v + k, 1});
        lp.c(v + 1) = -1.0;
        const int ends[2] = {pairs[p].i, pairs[p].j};
        const double sign[2] = {1.0, -1.0};
        for (int e = 0; e < 2; ++e) {
            const int row = row_of[ends[e]];
            if (row < 0)
                continue;
            for (int d = 0; d < 2; ++d)
                if (pairs[p].dir(d) != 0.0)
                    trip.emplace_back(row + d, v, sign[e] * pairs[p].dir(d));
        }
        const int r = node_rows + 2 * p;
        trip.emplace_back(r, v + 1, 1.0);
        trip.emplace_back(r, v + 2, 1.0);
        lp.b(r) = 1.0;
        trip.emplace_back(r + 1, v, 1.0);
        trip.emplace_back(r + 1, v + 1, -1.0);
        trip.emplace_back(r + 1, v + 3, -1.0);
    }
    lp.A.resize(lp.b.size(), 4 * np);
    lp.A.setFromTriplets(trip.begin(), trip.end());
    SolverOptions o = opts;
    o.log = nullptr;
    const ConicSolution sol = solve(lp, o);
    std::vector<char> out(np, 1);
    if (sol.status != SolveStatus::Optimal)
        return out;
    for (int p = 0; p < np; ++p)
        out[p] = sol.x(4 * p + 1) > 0.5 ? 1 : 0;
    return out;
}

} // namespace

StringSystem solve_strings(const StringGrid& grid, const std::vector<StringPair>& pairs, const StringProgram& prog,
                           const Eigen::VectorXd& f, double V0, const SolverOptions& opts)
{
    StringSystem sys = solve_once(grid, pairs, prog, f, V0, opts);
    const int np = static_cast<int>(pairs.size());

    // Strings that can never be in tension make the program lose its interior
    // points (and can make it weakly infeasible). On failure they are removed
    // and the reduced program is solved instead.
    if ((sys.status == SolveStatus::NumericalFailure || sys.status == SolveStatus::MaxIter) && np > 0) {
        const std::vector<char> keep = tension_capable(grid, pairs, prog, opts);
        if (std::find(keep.begin(), keep.end(), 0) != keep.end()) {
            std::vector<StringPair> reduced;
            std::vector<int> index;
            for (int p = 0; p < np; ++p)
                if (keep[p]) {
                    reduced.push_back(pairs[p]);
                    index.push_back(p);
                }
            const StringProgram rp = assemble_string_program(grid, reduced, f);
            const StringSystem sub = solve_once(grid, reduced, rp, f, V0, opts);
            sys.status = sub.status;
            sys.solution = sub.solution;
            if (rp.infeasible)
                sys.solution.message = "the load cannot be balanced by strings in tension";
            sys.Z_strings = sub.Z_strings;
            std::fill(sys.Pi.begin(), sys.Pi.end(), 0.0);
            std::fill(sys.pi.begin(), sys.pi.end(), 0.0);
            std::fill(sys.mu.begin(), sys.mu.end(), 0.0);
            for (size_t k = 0; k < index.size(); ++k) {
                sys.Pi[index[k]] = sub.Pi[k];
                sys.pi[index[k]] = sub.pi[k];
                sys.mu[index[k]] = sub.mu[k];
            }
        }
    }

    const int nn = static_cast<int>(grid.nodes.size());
    std::vector<Eigen::Vector3d> bal(nn, Eigen::Vector3d::Zero());
    for (int p = 0; p < np; ++p) {
        const StringPair& s = pairs[p];
        const Eigen::Vector3d c(s.dir.x() * sys.Pi[p], s.dir.y() * sys.Pi[p], sys.pi[p]);
        bal[s.i] += c;
        bal[s.j] -= c;
    }
    for (int k = 0; k < nn; ++k) {
        if (prog.node_row[k] < 0)
            continue;
        sys.inplane_residual = std::max(sys.inplane_residual, bal[k].head<2>().norm());
        sys.transverse_residual = std::max(sys.transverse_residual, std::abs(bal[k](2) - f(k)));
    }
    return sys;
}

void write_string_csv(std::ostream& os, const StringGrid& grid, const StringSystem& sys)
{
    os << "x1,y1,x2,y2,Pi,pi,mu_density\n";
    double pmax = 0.0;
    for (double v : sys.Pi)
        pmax = std::max(pmax, v);
    char buf[256];
    for (size_t p = 0; p < sys.pairs.size(); ++p) {
        if (!(sys.Pi[p] > 1e-10 * pmax))
            continue;
        const auto& a = grid.nodes[sys.pairs[p].i];
        const auto& b = grid.nodes[sys.pairs[p].j];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", a.x(), a.y(), b.x(), b.y(),
                      sys.Pi[p], sys.pi[p], sys.mu[p]);
        os << buf;
    }
}

} // namespace membrane
