#pragma once

#include "membrane/types.hpp"

#include <Eigen/Core>
#include <array>
#include <string>
#include <variant>
#include <vector>

namespace membrane {

enum class MeshPattern { UniformSENW, QuadrantSymmetric };
enum class DomainShape { Square, RightTriangle };

struct Element {
    std::array<int, 3> v;   // counter-clockwise vertex indices
    bool upper = false;     // upper/lower triangle of its square cell
    int cell = 0;           // cell index i2 * n + i1
};

// Structured triangulation of (0,a)^2. Elements are numbered cell by cell,
// left to right and row by row, lower triangle first. The right-triangle
// domain keeps only the elements below the anti-diagonal.
struct Mesh {
    double a = 1.0;
    int n = 1;
    MeshPattern pattern = MeshPattern::UniformSENW;
    DomainShape shape = DomainShape::Square;
    double h = 0.0;                          // element diameter sqrt(2) a / n
    std::vector<Eigen::Vector2d> vertices;   // (n+1)^2, index i2 * (n+1) + i1
    std::vector<Element> elements;
    std::vector<double> areas;
    std::vector<int> interior_map;           // vertex -> interior index or -1
    std::vector<int> interior_vertices;      // interior index -> vertex
    std::vector<std::array<int, 2>> cell_elements;   // (lower, upper), -1 when masked

    int num_interior() const { return static_cast<int>(interior_vertices.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }
    int vertex_index(int i1, int i2) const { return i2 * (n + 1) + i1; }
    Eigen::Vector2d centroid(int e) const;
    double diameter() const;
    bool on_boundary(const Eigen::Vector2d& x, double tol) const;
    bool contains(const Eigen::Vector2d& x, double tol) const;
    // Element containing x (closed), or -1.
    int locate(const Eigen::Vector2d& x) const;
    Eigen::Vector3d barycentric(int e, const Eigen::Vector2d& x) const;
    // Gradients of the three vertex hats on element e, one per column.
    Eigen::Matrix<double, 2, 3> hat_gradients(int e) const;
};

Mesh build_mesh(double a, int n, MeshPattern pattern, DomainShape shape = DomainShape::Square);

struct PointLoad {
    Eigen::Vector2d x;
    double P = 0.0;
};

struct LineLoad {
    Eigen::Vector2d p0, p1;
    double t = 0.0;
};

// Uniform pressure over the whole domain (empty region) or over a convex polygon.
struct PressureLoad {
    double p = 0.0;
    std::vector<Eigen::Vector2d> region;
};

using LoadComponent = std::variant<PointLoad, LineLoad, PressureLoad>;

struct LoadSpec {
    std::vector<LoadComponent> components;
};

// Hat-function integrals of the load over every vertex, boundary included.
Eigen::VectorXd nodal_load_all_vertices(const Mesh& mesh, const LoadSpec& load,
                                        std::vector<std::string>* warnings = nullptr);

// Restriction of nodal_load_all_vertices to the interior nodes (length m).
Eigen::VectorXd nodal_load_vector(const Mesh& mesh, const LoadSpec& load,
                                  std::vector<std::string>* warnings = nullptr);

// Sutherland-Hodgman clipping of a polygon against a convex counter-clockwise polygon.
std::vector<Eigen::Vector2d> clip_polygon(const std::vector<Eigen::Vector2d>& subject,
                                          const std::vector<Eigen::Vector2d>& convex);

double polygon_area(const std::vector<Eigen::Vector2d>& poly);
Eigen::Vector2d polygon_centroid(const std::vector<Eigen::Vector2d>& poly);

std::string to_string(MeshPattern p);
MeshPattern parse_pattern(const std::string& s);

} // namespace membrane
