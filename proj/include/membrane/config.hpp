#pragma once

#include "membrane/conic_solver.hpp"
#include "membrane/geometry.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace membrane {

// Malformed problem file; the message names the line or the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TrimMode { None, Fraction, Absolute };

struct StringOptions {
    int grid = 0;                 // nodes per side; 0 means n + 1
    double max_length = 0.0;      // in units of a; 0 keeps all pairs
    std::vector<std::array<Eigen::Vector2d, 2>> candidates;   // explicit pair list
};

// Problem description. Positions are given in units of a and converted to
// absolute coordinates on load.
struct ProblemConfig {
    double a = 1.0;
    DomainShape shape = DomainShape::Square;
    int n = 10;
    MeshPattern pattern = MeshPattern::UniformSENW;
    double E = 1.0;
    double nu = 0.0;              // -1 selects the Michell law
    double V0 = 1.0;
    LoadSpec loads;
    TrimMode trim = TrimMode::None;
    double trim_value = 1.0;
    SolverOptions solver;
    std::string out_dir = "out";
    std::vector<std::string> formats{"csv", "json"};
    StringOptions strings;
    std::optional<double> Lambda0;
    std::string source;           // original JSON text

    bool michell() const { return nu == -1.0; }
    bool wants(const std::string& fmt) const;
};

ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::string& path);

// Dimensionless value Z E^(1/4) / (F a), F the largest load magnitude
// (|P|, |t| a or |p| a^2).
double load_scale(const ProblemConfig& cfg);

} // namespace membrane
