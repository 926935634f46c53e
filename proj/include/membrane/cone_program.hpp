#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <string>
#include <vector>

namespace membrane {

// Zero: x = 0 (dual slack free). Free: x unrestricted (dual slack 0).
// Quad(d): x0 >= |(x1..x_{d-1})|, with Quad(1) the nonnegative ray.
// Psd3: 3x3 positive semi-definite matrix in scaled 6-vector coordinates.
enum class ConeKind { Zero, Free, Quad, Psd3 };

struct ConeBlock {
    ConeKind kind = ConeKind::Free;
    int start = 0;
    int size = 0;
};

// Variable and row layout of an assembled membrane program.
struct MembraneLayout {
    int num_elements = 0;
    int m = 0;                  // interior nodes
    bool michell = false;
    int row_u1 = 0, row_u2 = 0, row_w = 0, row_coupling = 0;
    std::vector<int> r0;        // per element
    std::vector<int> tau;       // per element, start of the 6 coordinates
    std::vector<int> aux;       // per element, start of the auxiliary cone copy
    std::vector<int> slack;     // per element (Michell), -1 otherwise
    double V0 = 1.0;
};

// Standard-form conic program: minimize c'x subject to A x = b, x in K.
struct ConeProgram {
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    std::vector<ConeBlock> cones;
    MembraneLayout layout;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_rows() const { return static_cast<int>(b.size()); }
};

enum class MembraneSymbol { r0, tau11, tau22, tau33, tau12, tau13, tau23 };

// Variable index of a symbol of element e.
int label(const ConeProgram& prog, int element, MembraneSymbol sym);

// Throws std::invalid_argument when blocks do not partition the variables
// or the dimensions of c, A, b disagree.
void validate(const ConeProgram& prog);

int cone_degree(const ConeProgram& prog);

// Plain-text sparse dump: a header with counts, the triplets of A, the
// vectors b and c, and the cone table.
void write_triplets(std::ostream& os, const ConeProgram& prog);
ConeProgram read_triplets(std::istream& is);

std::string to_string(ConeKind k);

} // namespace membrane
