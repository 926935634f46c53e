#include "membrane/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace membrane {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ConfigError("field '" + field + "': " + what);
}

const json* find(const json& obj, const char* key)
{
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& field)
{
    if (!v.is_number())
        fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        fail(field, "expected a finite number");
    return x;
}

double positive(const json& v, const std::string& field)
{
    const double x = number(v, field);
    if (!(x > 0.0))
        fail(field, "expected a positive number");
    return x;
}

Eigen::Vector2d point(const json& v, const std::string& field, double a)
{
    if (!v.is_array() || v.size() != 2)
        fail(field, "expected a two-element array [x, y]");
    return a * Eigen::Vector2d(number(v[0], field + "[0]"), number(v[1], field + "[1]"));
}

void check_inside(const Eigen::Vector2d& x, const ProblemConfig& cfg, const std::string& field)
{
    const double tol = 1e-12 * cfg.a;
    bool ok = x.x() >= -tol && x.y() >= -tol && x.x() <= cfg.a + tol && x.y() <= cfg.a + tol;
    if (cfg.shape == DomainShape::RightTriangle)
        ok = ok && x.x() + x.y() <= cfg.a + tol;
    if (!ok)
        fail(field, "lies outside the domain");
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end())
            fail(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
    }
}

std::string location(const std::string& text, size_t byte)
{
    size_t line = 1, col = 1;
    for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace

bool ProblemConfig::wants(const std::string& fmt) const
{
    return std::find(formats.begin(), formats.end(), fmt) != formats.end();
}

ProblemConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte points one past the offending character
        throw ConfigError("parse error at " + location(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
    }
    if (!root.is_object())
        throw ConfigError("the configuration must be a JSON object");
    check_keys(root, "",
               {"domain", "mesh", "material", "V0", "p", "loads", "trim", "solver", "outputs", "strings", "fmd",
                "name", "description"});

    ProblemConfig cfg;
    cfg.source = text;

    if (const json* d = find(root, "domain")) {
        if (!d->is_object())
            fail("domain", "expected an object");
        check_keys(*d, "domain", {"a", "shape"});
        if (const json* a = find(*d, "a"))
            cfg.a = positive(*a, "domain.a");
        if (const json* s = find(*d, "shape")) {
            const std::string v = s->is_string() ? s->get<std::string>() : "";
            if (v == "square")
                cfg.shape = DomainShape::Square;
            else if (v == "right_triangle" || v == "right-triangle")
                cfg.shape = DomainShape::RightTriangle;
            else
                fail("domain.shape", "expected \"square\" or \"right_triangle\"");
        }
    }

    if (const json* m = find(root, "mesh")) {
        if (!m->is_object())
            fail("mesh", "expected an object");
        check_keys(*m, "mesh", {"n", "pattern"});
        if (const json* n = find(*m, "n")) {
            if (!n->is_number_integer() || n->get<long long>() < 1 || n->get<long long>() > 100000)
                fail("mesh.n", "expected a positive integer");
            cfg.n = n->get<int>();
        }
        if (const json* p = find(*m, "pattern")) {
            if (!p->is_string())
                fail("mesh.pattern", "expected a string");
            try {
                cfg.pattern = parse_pattern(p->get<std::string>());
            } catch (const std::exception&) {
                fail("mesh.pattern", "expected \"uniform\" or \"quadrant_symmetric\"");
            }
        }
    }
    if (cfg.shape == DomainShape::RightTriangle && cfg.pattern != MeshPattern::UniformSENW)
        fail("mesh.pattern", "the right-triangle domain uses the uniform pattern");

    if (const json* mat = find(root, "material")) {
        if (!mat->is_object())
            fail("material", "expected an object");
        check_keys(*mat, "material", {"E", "nu"});
        if (const json* E = find(*mat, "E"))
            cfg.E = positive(*E, "material.E");
        if (const json* nu = find(*mat, "nu")) {
            if (nu->is_string()) {
                if (nu->get<std::string>() != "michell")
                    fail("material.nu", "expected a number in [-1, 1) or \"michell\"");
                cfg.nu = -1.0;
            } else {
                cfg.nu = number(*nu, "material.nu");
                if (!(cfg.nu >= -1.0 && cfg.nu < 1.0))
                    fail("material.nu", "expected a number in [-1, 1) or \"michell\"");
            }
        }
    }

    if (const json* v = find(root, "V0"))
        cfg.V0 = positive(*v, "V0");
    if (const json* p = find(root, "p")) {
        if (number(*p, "p") != 2.0)
            fail("p", "only the exponent 2 is supported");
    }

    if (const json* loads = find(root, "loads")) {
        if (!loads->is_array())
            fail("loads", "expected an array");
        for (size_t i = 0; i < loads->size(); ++i) {
            const json& l = (*loads)[i];
            const std::string f = "loads[" + std::to_string(i) + "]";
            if (!l.is_object() || !l.contains("type") || !l["type"].is_string())
                fail(f, "expected an object with a string \"type\"");
            const std::string type = l["type"].get<std::string>();
            if (type == "point") {
                check_keys(l, f, {"type", "x", "P"});
                if (!l.contains("x") || !l.contains("P"))
                    fail(f, "point load needs \"x\" and \"P\"");
                PointLoad p{point(l["x"], f + ".x", cfg.a), number(l["P"], f + ".P")};
                check_inside(p.x, cfg, f + ".x");
                cfg.loads.components.emplace_back(p);
            } else if (type == "line") {
                check_keys(l, f, {"type", "from", "to", "t"});
                if (!l.contains("from") || !l.contains("to") || !l.contains("t"))
                    fail(f, "line load needs \"from\", \"to\" and \"t\"");
                LineLoad ln{point(l["from"], f + ".from", cfg.a), point(l["to"], f + ".to", cfg.a),
                            number(l["t"], f + ".t")};
                check_inside(ln.p0, cfg, f + ".from");
                check_inside(ln.p1, cfg, f + ".to");
                cfg.loads.components.emplace_back(ln);
            } else if (type == "pressure") {
                check_keys(l, f, {"type", "p", "region"});
                if (!l.contains("p"))
                    fail(f, "pressure load needs \"p\"");
                PressureLoad pr;
                pr.p = number(l["p"], f + ".p");
                if (l.contains("region")) {
                    const json& r = l["region"];
                    if (!r.is_array() || r.size() < 3)
                        fail(f + ".region", "expected at least three [x, y] vertices");
                    for (size_t k = 0; k < r.size(); ++k) {
                        const std::string fk = f + ".region[" + std::to_string(k) + "]";
                        pr.region.push_back(point(r[k], fk, cfg.a));
                        check_inside(pr.region.back(), cfg, fk);
                    }
                    if (polygon_area(pr.region) <= 0.0)
                        fail(f + ".region", "expected a counter-clockwise polygon");
                }
                cfg.loads.components.emplace_back(pr);
            } else {
                fail(f + ".type", "expected \"point\", \"line\" or \"pressure\"");
            }
        }
    }

    if (const json* t = find(root, "trim")) {
        if (t->is_string() && t->get<std::string>() == "none") {
            cfg.trim = TrimMode::None;
        } else if (t->is_object()) {
            check_keys(*t, "trim", {"fraction", "absolute"});
            if (t->contains("fraction") == t->contains("absolute"))
                fail("trim", "give exactly one of \"fraction\" or \"absolute\"");
            if (const json* fr = find(*t, "fraction")) {
                cfg.trim = TrimMode::Fraction;
                cfg.trim_value = positive(*fr, "trim.fraction");
                if (cfg.trim_value > 1.0)
                    fail("trim.fraction", "expected a value in (0, 1]");
            } else {
                cfg.trim = TrimMode::Absolute;
                cfg.trim_value = positive((*t)["absolute"], "trim.absolute");
            }
        } else {
            fail("trim", "expected \"none\" or an object");
        }
    }

    if (const json* s = find(root, "solver")) {
        if (!s->is_object())
            fail("solver", "expected an object");
        check_keys(*s, "solver", {"gap_tol", "feas_tol", "max_iter"});
        if (const json* g = find(*s, "gap_tol"))
            cfg.solver.gap_tol = positive(*g, "solver.gap_tol");
        if (const json* g = find(*s, "feas_tol"))
            cfg.solver.feas_tol = positive(*g, "solver.feas_tol");
        if (const json* g = find(*s, "max_iter")) {
            if (!g->is_number_integer() || g->get<long long>() < 1)
                fail("solver.max_iter", "expected a positive integer");
            cfg.solver.max_iter = g->get<int>();
        }
    }

    if (const json* o = find(root, "outputs")) {
        if (!o->is_object())
            fail("outputs", "expected an object");
        check_keys(*o, "outputs", {"directory", "formats"});
        if (const json* d = find(*o, "directory")) {
            if (!d->is_string())
                fail("outputs.directory", "expected a string");
            cfg.out_dir = d->get<std::string>();
        }
        if (const json* f = find(*o, "formats")) {
            if (!f->is_array())
                fail("outputs.formats", "expected an array of strings");
            cfg.formats.clear();
            for (const auto& x : *f) {
                if (!x.is_string())
                    fail("outputs.formats", "expected an array of strings");
                const std::string v = x.get<std::string>();
                if (v != "csv" && v != "json" && v != "obj" && v != "triplets")
                    fail("outputs.formats", "unknown format \"" + v + "\"");
                cfg.formats.push_back(v);
            }
        }
    }

    if (const json* s = find(root, "strings")) {
        if (!s->is_object())
            fail("strings", "expected an object");
        check_keys(*s, "strings", {"grid", "max_length", "candidates"});
        if (const json* g = find(*s, "grid")) {
            if (!g->is_number_integer() || g->get<long long>() < 1)
                fail("strings.grid", "expected a positive integer");
            cfg.strings.grid = g->get<int>();
        }
        if (const json* l = find(*s, "max_length"))
            cfg.strings.max_length = cfg.a * number(*l, "strings.max_length");
        if (const json* c = find(*s, "candidates")) {
            if (!c->is_array())
                fail("strings.candidates", "expected an array of [x1, y1, x2, y2]");
            for (size_t i = 0; i < c->size(); ++i) {
                const json& seg = (*c)[i];
                const std::string f = "strings.candidates[" + std::to_string(i) + "]";
                if (!seg.is_array() || seg.size() != 4)
                    fail(f, "expected [x1, y1, x2, y2]");
                std::array<Eigen::Vector2d, 2> ends{
                    cfg.a * Eigen::Vector2d(number(seg[0], f), number(seg[1], f)),
                    cfg.a * Eigen::Vector2d(number(seg[2], f), number(seg[3], f))};
                cfg.strings.candidates.push_back(ends);
            }
        }
    }

    if (const json* f = find(root, "fmd")) {
        if (!f->is_object() || !f->contains("Lambda0"))
            fail("fmd", "expected an object with \"Lambda0\"");
        check_keys(*f, "fmd", {"Lambda0"});
        cfg.Lambda0 = positive((*f)["Lambda0"], "fmd.Lambda0");
    }
    return cfg;
}

ProblemConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open configuration file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

double load_scale(const ProblemConfig& cfg)
{
    double F = 0.0;
    for (const auto& c : cfg.loads.components) {
        if (const auto* p = std::get_if<PointLoad>(&c))
            F = std::max(F, std::abs(p->P));
        else if (const auto* l = std::get_if<LineLoad>(&c))
            F = std::max(F, std::abs(l->t) * cfg.a);
        else if (const auto* pr = std::get_if<PressureLoad>(&c))
            F = std::max(F, std::abs(pr->p) * cfg.a * cfg.a);
    }
    return F;
}

} // namespace membrane
