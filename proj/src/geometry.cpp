#include "membrane/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace membrane {

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a(0) * b(1) - a(1) * b(0);
}

// SE-NW diagonal: lower = {(i1,i2), (i1+1,i2), (i1,i2+1)}.
// SW-NE diagonal: lower = {(i1,i2), (i1+1,i2), (i1+1,i2+1)}.
bool uses_sw_ne(MeshPattern pattern, int n, int i1, int i2)
{
    if (pattern == MeshPattern::UniformSENW)
        return false;
    if (n % 2 == 1 && (2 * i1 + 1 == n || 2 * i2 + 1 == n))
        return false;
    const bool left = 2 * i1 < n;
    const bool bottom = 2 * i2 < n;
    return left == bottom;
}

} // namespace

Mesh build_mesh(double a, int n, MeshPattern pattern, DomainShape shape)
{
    if (n < 1)
        throw std::domain_error("mesh needs at least one subdivision");
    if (!(a > 0.0))
        throw std::domain_error("edge length must be positive");
    if (shape == DomainShape::RightTriangle && pattern != MeshPattern::UniformSENW)
        throw std::domain_error("the right-triangle domain requires the UniformSENW pattern");

    Mesh mesh;
    mesh.a = a;
    mesh.n = n;
    mesh.pattern = pattern;
    mesh.shape = shape;
    mesh.h = std::sqrt(2.0) * a / n;

    const double dx = a / n;
    mesh.vertices.reserve(static_cast<size_t>(n + 1) * (n + 1));
    for (int i2 = 0; i2 <= n; ++i2)
        for (int i1 = 0; i1 <= n; ++i1)
            mesh.vertices.emplace_back(dx * i1, dx * i2);

    mesh.cell_elements.assign(static_cast<size_t>(n) * n, {-1, -1});
    const double area = 0.5 * dx * dx;
    for (int i2 = 0; i2 < n; ++i2) {
        for (int i1 = 0; i1 < n; ++i1) {
            const int cell = i2 * n + i1;
            const int v00 = mesh.vertex_index(i1, i2);
            const int v10 = mesh.vertex_index(i1 + 1, i2);
            const int v01 = mesh.vertex_index(i1, i2 + 1);
            const int v11 = mesh.vertex_index(i1 + 1, i2 + 1);
            Element lower, upper;
            lower.cell = upper.cell = cell;
            upper.upper = true;
            if (uses_sw_ne(pattern, n, i1, i2)) {
                lower.v = {v00, v10, v11};
                upper.v = {v00, v11, v01};
            } else {
                lower.v = {v00, v10, v01};
                upper.v = {v10, v11, v01};
            }
            const bool keep_lower = shape == DomainShape::Square || i1 + i2 <= n - 1;
            const bool keep_upper = shape == DomainShape::Square || i1 + i2 <= n - 2;
            if (keep_lower) {
                mesh.cell_elements[cell][0] = mesh.num_elements();
                mesh.elements.push_back(lower);
                mesh.areas.push_back(area);
            }
            if (keep_upper) {
                mesh.cell_elements[cell][1] = mesh.num_elements();
                mesh.elements.push_back(upper);
                mesh.areas.push_back(area);
            }
        }
    }

    mesh.interior_map.assign(mesh.vertices.size(), -1);
    for (int i2 = 1; i2 < n; ++i2) {
        for (int i1 = 1; i1 < n; ++i1) {
            if (shape == DomainShape::RightTriangle && i1 + i2 >= n)
                continue;
            const int v = mesh.vertex_index(i1, i2);
            mesh.interior_map[v] = static_cast<int>(mesh.interior_vertices.size());
            mesh.interior_vertices.push_back(v);
        }
    }
    return mesh;
}

Eigen::Vector2d Mesh::centroid(int e) const
{
    const auto& el = elements[e];
    return (vertices[el.v[0]] + vertices[el.v[1]] + vertices[el.v[2]]) / 3.0;
}

double Mesh::diameter() const
{
    return std::sqrt(2.0) * a;
}

bool Mesh::contains(const Eigen::Vector2d& x, double tol) const
{
    if (x(0) < -tol || x(1) < -tol)
        return false;
    if (shape == DomainShape::Square)
        return x(0) <= a + tol && x(1) <= a + tol;
    return x(0) + x(1) <= a + tol;
}

bool Mesh::on_boundary(const Eigen::Vector2d& x, double tol) const
{
    if (!contains(x, tol))
        return false;
    if (std::abs(x(0)) <= tol || std::abs(x(1)) <= tol)
        return true;
    if (shape == DomainShape::Square)
        return std::abs(x(0) - a) <= tol || std::abs(x(1) - a) <= tol;
    return std::abs(x(0) + x(1) - a) <= tol;
}

Eigen::Vector3d Mesh::barycentric(int e, const Eigen::Vector2d& x) const
{
    const auto& el = elements[e];
    const Eigen::Vector2d& p0 = vertices[el.v[0]];
    const Eigen::Vector2d& p1 = vertices[el.v[1]];
    const Eigen::Vector2d& p2 = vertices[el.v[2]];
    const double twice = cross(p1 - p0, p2 - p0);
    const double l1 = cross(x - p0, p2 - p0) / twice;
    const double l2 = cross(p1 - p0, x - p0) / twice;
    return Eigen::Vector3d(1.0 - l1 - l2, l1, l2);
}

Eigen::Matrix<double, 2, 3> Mesh::hat_gradients(int e) const
{
    const auto& el = elements[e];
    const Eigen::Vector2d& p0 = vertices[el.v[0]];
    const Eigen::Vector2d& p1 = vertices[el.v[1]];
    const Eigen::Vector2d& p2 = vertices[el.v[2]];
    const double twice = cross(p1 - p0, p2 - p0);
    Eigen::Matrix<double, 2, 3> g;
    g.col(0) << (p1(1) - p2(1)) / twice, (p2(0) - p1(0)) / twice;
    g.col(1) << (p2(1) - p0(1)) / twice, (p0(0) - p2(0)) / twice;
    g.col(2) << (p0(1) - p1(1)) / twice, (p1(0) - p0(0)) / twice;
    return g;
}

int Mesh::locate(const Eigen::Vector2d& x) const
{
    const double tol = 1e-12 * a;
    if (!contains(x, tol))
        return -1;
    const double dx = a / n;
    const int i1 = std::clamp(static_cast<int>(std::floor(x(0) / dx)), 0, n - 1);
    const int i2 = std::clamp(static_cast<int>(std::floor(x(1) / dx)), 0, n - 1);
    int best = -1;
    double best_min = -1e300;
    for (int di2 = -1; di2 <= 1; ++di2) {
        for (int di1 = -1; di1 <= 1; ++di1) {
            const int j1 = i1 + di1, j2 = i2 + di2;
            if (j1 < 0 || j2 < 0 || j1 >= n || j2 >= n)
                continue;
            for (int e : cell_elements[j2 * n + j1]) {
                if (e < 0)
                    continue;
                const double m = barycentric(e, x).minCoeff();
                if (m >= -1e-12)
                    return e;
                if (m > best_min) {
                    best_min = m;
                    best = e;
                }
            }
        }
    }
    return best_min > -1e-9 ? best : -1;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly)
{
    double s = 0.0;
    for (size_t i = 0; i < poly.size(); ++i)
        s += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * s;
}

Eigen::Vector2d polygon_centroid(const std::vector<Eigen::Vector2d>& poly)
{
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    double s = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        const double w = cross(p, q);
        c += w * (p + q);
        s += w;
    }
    if (s == 0.0)
        return poly.empty() ? c : poly.front();
    return c / (3.0 * s);
}

std::vector<Eigen::Vector2d> clip_polygon(const std::vector<Eigen::Vector2d>& subject,
                                          const std::vector<Eigen::Vector2d>& convex)
{
    std::vector<Eigen::Vector2d> clip = convex;
    if (polygon_area(clip) < 0.0)
        std::reverse(clip.begin(), clip.end());
    std::vector<Eigen::Vector2d> out = subject;
    for (size_t k = 0; k < clip.size() && !out.empty(); ++k) {
        const Eigen::Vector2d a = clip[k];
        const Eigen::Vector2d b = clip[(k + 1) % clip.size()];
        const Eigen::Vector2d edge = b - a;
        std::vector<Eigen::Vector2d> in = std::move(out);
        out.clear();
        for (size_t i = 0; i < in.size(); ++i) {
            const Eigen::Vector2d& p = in[i];
            const Eigen::Vector2d& q = in[(i + 1) % in.size()];
            const double sp = cross(edge, p - a);
            const double sq = cross(edge, q - a);
            if (sp >= 0.0) {
                out.push_back(p);
                if (sq < 0.0)
                    out.push_back(p + (q - p) * (sp / (sp - sq)));
            } else if (sq >= 0.0) {
                out.push_back(p + (q - p) * (sp / (sp - sq)));
            }
        }
    }
    return out;
}

namespace {

void add_point(const Mesh& mesh, const PointLoad& pl, Eigen::VectorXd& f, std::vector<std::string>* warnings)
{
    const double tol = 1e-12 * mesh.a;
    if (!mesh.contains(pl.x, tol))
        throw std::domain_error("point load lies outside the domain");
    if (mesh.on_boundary(pl.x, tol) && warnings) {
        std::ostringstream os;
        os << "point load at (" << pl.x(0) << ", " << pl.x(1) << ") lies on the boundary and contributes nothing";
        warnings->push_back(os.str());
    }
    const double dx = mesh.a / mesh.n;
    const int i1 = static_cast<int>(std::lround(pl.x(0) / dx));
    const int i2 = static_cast<int>(std::lround(pl.x(1) / dx));
    if (i1 >= 0 && i2 >= 0 && i1 <= mesh.n && i2 <= mesh.n) {
        const int v = mesh.vertex_index(i1, i2);
        if ((mesh.vertices[v] - pl.x).norm() <= mesh.h / 10.0 && mesh.contains(mesh.vertices[v], tol)) {
            f(v) += pl.P;
            return;
        }
    }
    const int e = mesh.locate(pl.x);
    if (e < 0)
        throw std::domain_error("point load lies outside the meshed domain");
    const Eigen::Vector3d lam = mesh.barycentric(e, pl.x);
    for (int k = 0; k < 3; ++k)
        f(mesh.elements[e].v[k]) += pl.P * lam(k);
}

// Parameter interval of the segment p0 + t (p1 - p0), t in [0,1], inside element e.
bool clip_segment(const Mesh& mesh, int e, const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                  double& t0, double& t1)
{
    const auto& el = mesh.elements[e];
    const Eigen::Vector2d d = p1 - p0;
    const double scale = mesh.a * mesh.a;
    t0 = 0.0;
    t1 = 1.0;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector2d& a = mesh.vertices[el.v[k]];
        const Eigen::Vector2d& b = mesh.vertices[el.v[(k + 1) % 3]];
        const Eigen::Vector2d edge = b - a;
        // inside: cross(edge, p - a) >= 0
        const double num = cross(edge, p0 - a);
        const double den = cross(edge, d);
        if (std::abs(den) <= 1e-14 * scale) {
            if (num < -1e-12 * scale)
                return false;
            continue;
        }
        const double t = -num / den;
        if (den > 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
    }
    return t1 > t0;
}

void add_line(const Mesh& mesh, const LineLoad& ll, Eigen::VectorXd& f)
{
    const double tol = 1e-12 * mesh.a;
    if (!mesh.contains(ll.p0, tol) || !mesh.contains(ll.p1, tol))
        throw std::domain_error("line load leaves the domain");
    const Eigen::Vector2d d = ll.p1 - ll.p0;
    const double len = d.norm();
    if (len == 0.0)
        return;
    const Eigen::Vector2d lo = ll.p0.cwiseMin(ll.p1).array() - mesh.h;
    const Eigen::Vector2d hi = ll.p0.cwiseMax(ll.p1).array() + mesh.h;

    std::vector<double> cuts = {0.0, 1.0};
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::Vector2d c = mesh.centroid(e);
        if ((c.array() < lo.array()).any() || (c.array() > hi.array()).any())
            continue;
        double t0, t1;
        if (clip_segment(mesh, e, ll.p0, ll.p1, t0, t1)) {
            cuts.push_back(t0);
            cuts.push_back(t1);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> nodes;
    for (double t : cuts) {
        if (nodes.empty() || t - nodes.back() > 1e-12)
            nodes.push_back(t);
    }
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double ta = nodes[k], tb = nodes[k + 1];
        const Eigen::Vector2d xa = ll.p0 + ta * d;
        const Eigen::Vector2d xb = ll.p0 + tb * d;
        const int e = mesh.locate(0.5 * (xa + xb));
        if (e < 0)
            continue;
        const Eigen::Vector3d la = mesh.barycentric(e, xa);
        const Eigen::Vector3d lb = mesh.barycentric(e, xb);
        const double w = ll.t * len * (tb - ta) * 0.5;
        for (int i = 0; i < 3; ++i)
            f(mesh.elements[e].v[i]) += w * (la(i) + lb(i));
    }
}

void add_pressure(const Mesh& mesh, const PressureLoad& pr, Eigen::VectorXd& f)
{
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements[e];
        if (pr.region.empty()) {
            const double w = pr.p * mesh.areas[e] / 3.0;
            for (int k = 0; k < 3; ++k)
                f(el.v[k]) += w;
            continue;
        }
        const std::vector<Eigen::Vector2d> tri = {mesh.vertices[el.v[0]], mesh.vertices[el.v[1]], mesh.vertices[el.v[2]]};
        const auto poly = clip_polygon(tri, pr.region);
        if (poly.size() < 3)
            continue;
        const double area = std::abs(polygon_area(poly));
        if (area <= 1e-15 * mesh.areas[e])
            continue;
        const Eigen::Vector3d lam = mesh.barycentric(e, polygon_centroid(poly));
        for (int k = 0; k < 3; ++k)
            f(el.v[k]) += pr.p * area * lam(k);
    }
}

} // namespace

Eigen::VectorXd nodal_load_all_vertices(const Mesh& mesh, const LoadSpec& load, std::vector<std::string>* warnings)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
    for (const auto& comp : load.components) {
        if (const auto* pl = std::get_if<PointLoad>(&comp))
            add_point(mesh, *pl, f, warnings);
        else if (const auto* ll = std::get_if<LineLoad>(&comp))
            add_line(mesh, *ll, f);
        else
            add_pressure(mesh, std::get<PressureLoad>(comp), f);
    }
    return f;
}

Eigen::VectorXd nodal_load_vector(const Mesh& mesh, const LoadSpec& load, std::vector<std::string>* warnings)
{
    const Eigen::VectorXd all = nodal_load_all_vertices(mesh, load, warnings);
    Eigen::VectorXd f(mesh.num_interior());
    for (int j = 0; j < mesh.num_interior(); ++j)
        f(j) = all(mesh.interior_vertices[j]);
    return f;
}

std::string to_string(MeshPattern p)
{
    return p == MeshPattern::UniformSENW ? "uniform" : "quadrant_symmetric";
}

MeshPattern parse_pattern(const std::string& s)
{
    if (s == "uniform" || s == "UniformSENW" || s == "uniform_se_nw")
        return MeshPattern::UniformSENW;
    if (s == "quadrant_symmetric" || s == "QuadrantSymmetric" || s == "symmetric")
        return MeshPattern::QuadrantSymmetric;
    throw std::invalid_argument("unknown mesh pattern '" + s + "'");
}

} // namespace membrane
