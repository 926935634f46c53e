#include "membrane/cone_program.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace membrane {

int label(const ConeProgram& prog, int element, MembraneSymbol sym)
{
    const auto& lay = prog.layout;
    if (element < 0 || element >= lay.num_elements)
        throw std::out_of_range("element index out of range");
    if (sym == MembraneSymbol::r0)
        return lay.r0[element];
    return lay.tau[element] + (static_cast<int>(sym) - 1);
}

void validate(const ConeProgram& prog)
{
    const int n = prog.num_vars();
    if (prog.A.cols() != n || prog.A.rows() != prog.num_rows())
        throw std::invalid_argument("cone program dimensions disagree");
    int next = 0;
    for (const auto& blk : prog.cones) {
        if (blk.start != next)
            throw std::invalid_argument("cone blocks do not partition the variables");
        if (blk.size < 1 || (blk.kind == ConeKind::Psd3 && blk.size != 6))
            throw std::invalid_argument("invalid cone block size");
        next += blk.size;
    }
    if (next != n)
        throw std::invalid_argument("cone blocks do not cover the variables");
}

int cone_degree(const ConeProgram& prog)
{
    int deg = 0;
    for (const auto& blk : prog.cones) {
        if (blk.kind == ConeKind::Quad)
            deg += 1;
        else if (blk.kind == ConeKind::Psd3)
            deg += 3;
    }
    return deg;
}

std::string to_string(ConeKind k)
{
    switch (k) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Free: return "free";
    case ConeKind::Quad: return "quad";
    case ConeKind::Psd3: return "psd3";
    }
    return "?";
}

namespace {

ConeKind parse_kind(const std::string& s)
{
    if (s == "zero") return ConeKind::Zero;
    if (s == "free") return ConeKind::Free;
    if (s == "quad") return ConeKind::Quad;
    if (s == "psd3") return ConeKind::Psd3;
    throw std::invalid_argument("unknown cone kind '" + s + "'");
}

void expect(std::istream& is, const std::string& word)
{
    std::string tok;
    if (!(is >> tok) || tok != word)
        throw std::invalid_argument("triplet file: expected '" + word + "'");
}

} // namespace

void write_triplets(std::ostream& os, const ConeProgram& prog)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    os << "vars " << prog.num_vars() << " rows " << prog.num_rows() << " nnz " << prog.A.nonZeros()
       << " cones " << prog.cones.size() << "\n";
    os << "A\n";
    for (int k = 0; k < prog.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.A, k); it; ++it)
            os << it.row() << " " << it.col() << " " << it.value() << "\n";
    os << "b\n";
    for (int i = 0; i < prog.num_rows(); ++i)
        os << prog.b(i) << "\n";
    os << "c\n";
    for (int i = 0; i < prog.num_vars(); ++i)
        os << prog.c(i) << "\n";
    os << "cones\n";
    for (const auto& blk : prog.cones)
        os << to_string(blk.kind) << " " << blk.start << " " << blk.size << "\n";
    os.flags(flags);
    os.precision(prec);
}

ConeProgram read_triplets(std::istream& is)
{
    int vars = 0, rows = 0, nnz = 0, ncones = 0;
    expect(is, "vars");
    is >> vars;
    expect(is, "rows");
    is >> rows;
    expect(is, "nnz");
    is >> nnz;
    expect(is, "cones");
    is >> ncones;
    if (!is || vars < 0 || rows < 0 || nnz < 0 || ncones < 0)
        throw std::invalid_argument("triplet file: malformed header");
    ConeProgram prog;
    expect(is, "A");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nnz);
    for (int k = 0; k < nnz; ++k) {
        int r, c;
        double v;
        if (!(is >> r >> c >> v))
            throw std::invalid_argument("triplet file: truncated matrix");
        trip.emplace_back(r, c, v);
    }
    prog.A.resize(rows, vars);
    prog.A.setFromTriplets(trip.begin(), trip.end());
    expect(is, "b");
    prog.b.resize(rows);
    for (int i = 0; i < rows; ++i)
        is >> prog.b(i);
    expect(is, "c");
    prog.c.resize(vars);
    for (int i = 0; i < vars; ++i)
        is >> prog.c(i);
    expect(is, "cones");
    for (int k = 0; k < ncones; ++k) {
        std::string kind;
        ConeBlock blk;
        if (!(is >> kind >> blk.start >> blk.size))
            throw std::invalid_argument("triplet file: truncated cone table");
        blk.kind = parse_kind(kind);
        prog.cones.push_back(blk);
    }
    validate(prog);
    return prog;
}

} // namespace membrane
