#pragma once

// Command-line front end: argument parsing, dispatch and JSON reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "srkilling/files.hpp"
#include "srkilling/killing.hpp"

namespace srk::cli {

inline constexpr const char* version = "0.1.0";

using json = nlohmann::ordered_json;

/// Compact JSON with doubles at 17 significant digits; non-finite values become null.
inline void dump(const json& j, std::string& out) {
    switch (j.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            if (!first) out += ',';
            first = false;
            out += json(k).dump();
            out += ':';
            dump(v, out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ',';
            dump(j[i], out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>() + 0.0;
        out += std::isfinite(v) ? format_real(v) : "null";
        break;
    }
    default:
        out += j.dump();
    }
}

inline std::string dump(const json& j) {
    std::string s;
    dump(j, s);
    return s;
}

inline json to_json(const Check& c) {
    return json{{"name", c.name}, {"max_residual", c.max_residual}, {"points", c.points}, {"tol", c.tol},
                {"pass", c.pass}};
}

inline json to_json(const Generator& g) {
    json X = json::array(), A = json::array(), q = json::array();
    for (int i = 0; i < g.rank(); ++i) X.push_back(g.X[i]);
    for (int i = 0; i < g.rank(); ++i) {
        json row = json::array();
        for (int j = 0; j < g.rank(); ++j) row.push_back(g.A(i, j));
        A.push_back(row);
    }
    for (double v : g.q) q.push_back(v);
    return json{{"X", X}, {"A", A}, {"c", g.c}, {"at", q}};
}

inline json to_json(const Point& p) {
    json a = json::array();
    for (double v : p) a.push_back(v);
    return a;
}

// Nested arrays indexed like the tensor's slots.
inline json nest(const NumTensor& t) {
    std::function<json(std::size_t, int)> rec = [&](std::size_t base, int slot) -> json {
        if (slot == t.slots()) return t.data[base];
        json a = json::array();
        for (int i = 0; i < t.h; ++i) a.push_back(rec(base * static_cast<std::size_t>(t.h) + static_cast<std::size_t>(i), slot + 1));
        return a;
    };
    return rec(0, 0);
}

inline json nest_strings(const Tensor& t) {
    std::function<json(std::size_t, int)> rec = [&](std::size_t base, int slot) -> json {
        if (slot == t.slots()) return to_string(t.data[base]);
        json a = json::array();
        for (int i = 0; i < t.h; ++i) a.push_back(rec(base * static_cast<std::size_t>(t.h) + static_cast<std::size_t>(i), slot + 1));
        return a;
    };
    return rec(0, 0);
}

inline json strings(const std::vector<Expr>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(to_string(e));
    return a;
}

/// Human-readable rendering of a report.
inline std::string pretty(const json& rep) {
    std::ostringstream os;
    os << "srkilling " << rep.value("version", "") << "  " << rep.value("command", "");
    if (rep.contains("structure")) os << "  " << rep["structure"].get<std::string>();
    if (rep.contains("fingerprint")) os << "  [" << rep["fingerprint"].get<std::string>() << "]";
    os << "\n";
    for (const auto& [k, v] : rep.items()) {
        if (k == "tool" || k == "version" || k == "command" || k == "structure" || k == "fingerprint" ||
            k == "checks" || k == "pass")
            continue;
        std::string s = dump(v);
        if (s.size() > 100) s = s.substr(0, 97) + "...";
        os << "  " << std::left << std::setw(22) << k << s << "\n";
    }
    if (rep.contains("checks") && !rep["checks"].empty()) {
        os << "\n  " << std::left << std::setw(22) << "check" << std::setw(26) << "max residual" << std::setw(9)
           << "points" << std::setw(25) << "tol" << "result\n";
        for (const auto& c : rep["checks"]) {
            os << "  " << std::left << std::setw(22) << c["name"].get<std::string>() << std::setw(26)
               << dump(c["max_residual"]) << std::setw(9) << dump(c["points"]) << std::setw(25) << dump(c["tol"])
               << (c["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
        }
    }
    if (rep.contains("pass")) os << "\noverall: " << (rep["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

struct Options {
    std::string structure;
    std::optional<double> tol;
    std::string grid;
    std::string out;
    bool pretty = false;
    std::uint64_t seed = 0;
    std::string backend = "auto";
    std::string at;
    std::string order;
    int m_max = 6;
    std::vector<std::string> curves;
    std::string gen;
    double step = 1e-3;
    bool require_horizontal = false;
    std::string field;
    int samples = 100;
};

namespace detail {

inline ContactStructure load(const Options& o) {
    if (o.structure.empty()) throw InputError("no structure given (path or built-in name)");
    return ContactStructure(load_structure(o.structure));
}

inline double tol_or(const Options& o, double fallback) {
    if (!o.tol) return fallback;
    if (!(*o.tol > 0)) throw InputError("--tol must be > 0");
    return *o.tol;
}

inline std::vector<Point> sample_points(const ContactStructure& s, const Options& o) {
    if (s.mode() == Mode::Lie) return {Point(static_cast<std::size_t>(s.dim()), 0.0)};
    if (!o.grid.empty()) return parse_grid(o.grid, s.coords()).points();
    if (o.samples < 1) throw InputError("--samples must be >= 1");
    return random_points(static_cast<std::size_t>(o.samples), static_cast<std::size_t>(s.dim()), s.box(), o.seed);
}

inline Point point_or_origin(const ContactStructure& s, const std::string& at) {
    if (at.empty()) {
        if (s.mode() == Mode::Lie) return Point(static_cast<std::size_t>(s.dim()), 0.0);
        throw InputError("--at <point> is required");
    }
    return parse_point(at, s.coords(), static_cast<std::size_t>(s.dim()));
}

inline GeneratorSpaceOptions space_options(const Options& o) {
    GeneratorSpaceOptions opt;
    if (o.m_max < 0) throw InputError("--m-max must be >= 0");
    opt.m_max = o.m_max;
    if (!o.order.empty() && o.order != "auto") {
        try {
            std::size_t used = 0;
            opt.order = std::stoi(o.order, &used);
            if (used != o.order.size() || opt.order < 0) throw std::invalid_argument("order");
        } catch (const std::exception&) {
            throw InputError("--order must be auto or a non-negative integer, got '" + o.order + "'");
        }
    }
    return opt;
}

inline json header(const std::string& command, const ContactStructure& s) {
    return json{{"tool", "srkilling"},
                {"version", version},
                {"command", command},
                {"structure", s.definition().source},
                {"fingerprint", s.fingerprint()}};
}

inline void finish(json& rep, const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks) arr.push_back(to_json(c));
    rep["checks"] = arr;
    rep["pass"] = all_pass(checks);
}

inline Check count_check(std::string name, double count) {
    return {std::move(name), count, 1, 1.0, count < 1.0};
}

} // namespace detail

// --- subcommands ------------------------------------------------------------

inline json cmd_check(const Options& o) {
    auto s = detail::load(o);
    json rep = detail::header("check", s);
    const double tol = detail::tol_or(o, 1e-10);
    auto pts = o.grid.empty() ? s.default_samples() : detail::sample_points(s, o);
    auto r = s.check_special(pts, tol);
    rep["mode"] = s.mode() == Mode::Chart ? "chart" : "lie";
    rep["n"] = s.n();
    rep["orientation_sign"] = s.orientation_sign();
    if (s.mode() == Mode::Chart) rep["coords"] = s.coords();
    rep["alpha"] = strings(s.alpha());
    rep["reeb"] = strings(s.reeb());
    rep["special"] = r.special();
    std::vector<Check> checks{{"reeb_contact", r.contact_residual, r.points, tol, r.contact_residual < tol},
                              {"reeb_metric", r.metric_residual, r.points, tol, r.metric_residual < tol}};
    if (s.mode() == Mode::Chart) {
        const int h = s.rank(), d = s.dim();
        std::vector<Expr> unit, annihilates;
        {
            std::vector<Expr> t;
            for (int i = 0; i < d; ++i) t.push_back(s.alpha()[static_cast<std::size_t>(i)] * s.reeb()[static_cast<std::size_t>(i)]);
            unit.push_back(add(std::move(t)) - Expr(1));
        }
        for (int a = 0; a < h; ++a) {
            std::vector<Expr> t;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    t.push_back(s.dalpha()[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                                s.reeb()[static_cast<std::size_t>(i)] * s.frame()[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)]);
            annihilates.push_back(add(std::move(t)));
        }
        checks.push_back(residual_check("alpha_reeb", unit, pts, tol));
        checks.push_back(residual_check("dalpha_reeb", annihilates, pts, tol));
    }
    detail::finish(rep, checks);
    return rep;
}

inline json cmd_connection(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    json rep = detail::header("connection", s);
    rep["backend"] = g.uses_jets() ? "jet" : "symbolic";
    const int h = g.rank();
    std::vector<Point> pts;
    if (!o.at.empty() || s.mode() == Mode::Lie) {
        Point p = detail::point_or_origin(s, o.at);
        auto pd = g.at(p);
        rep["at"] = to_json(p);
        json gam = json::array();
        for (int dir = 0; dir <= h; ++dir) {
            json a = json::array();
            for (int j = 0; j < h; ++j) {
                json b = json::array();
                for (int k = 0; k < h; ++k) b.push_back(pd.G(dir, j, k));
                a.push_back(b);
            }
            gam.push_back(a);
        }
        rep["gamma"] = gam;
        pts = {p};
    } else {
        if (g.uses_jets()) throw InputError("--at <point> is required for structures evaluated with jets");
        const auto& c = g.symbolic(0).connection();
        json gam = json::array();
        for (int dir = 0; dir <= h; ++dir) {
            json a = json::array();
            for (int j = 0; j < h; ++j) {
                json b = json::array();
                for (int k = 0; k < h; ++k) b.push_back(to_string(c.gamma(dir, j, k)));
                a.push_back(b);
            }
            gam.push_back(a);
        }
        rep["gamma"] = gam;
        pts = detail::sample_points(s, o);
    }
    rep["layout"] = "gamma[dir][j][k]: component k of the derivative of e_j along dir (0 = reeb, a = e_a)";
    std::vector<Check> checks;
    for (auto& c : g.verify_geometry(pts, detail::tol_or(o, 1e-10)))
        if (c.name == "metricity" || c.name == "torsion") checks.push_back(c);
    detail::finish(rep, checks);
    return rep;
}

inline json cmd_curvature(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    json rep = detail::header("curvature", s);
    rep["backend"] = g.uses_jets() ? "jet" : "symbolic";
    int order = 0;
    if (!o.order.empty()) {
        auto opt = detail::space_options(o);
        if (opt.order < 0) throw InputError("--order must be a non-negative integer here");
        order = opt.order;
    }
    if (!g.fits(order)) throw LimitError("--order " + std::to_string(order) + " exceeds the component bound");
    std::vector<Point> pts;
    if (!o.at.empty() || s.mode() == Mode::Lie) {
        Point p = detail::point_or_origin(s, o.at);
        rep["at"] = to_json(p);
        rep["order"] = order;
        auto v = g.values(p, order + 1);
        rep["R"] = nest(v.R[0]);
        rep["dalpha"] = nest(v.dalpha[0]);
        json nr = json::array(), nd = json::array();
        for (int i = 1; i <= order; ++i) {
            nr.push_back(nest(v.R[static_cast<std::size_t>(i)]));
            nd.push_back(nest(v.dalpha[static_cast<std::size_t>(i)]));
        }
        rep["nabla_R"] = nr;
        rep["nabla_dalpha"] = nd;
        pts = {p};
    } else {
        pts = detail::sample_points(s, o);
        if (!g.uses_jets()) {
            const auto& cv = g.symbolic(order);
            rep["R"] = nest_strings(cv.R());
            rep["R_identically_zero"] =
                std::all_of(cv.R().data.begin(), cv.R().data.end(), [](const Expr& e) { return e.is_zero(); });
        }
        double m = 0.0;
        for (const auto& p : pts)
            for (double x : g.at(p).R) m = std::max(m, std::abs(x));
        rep["max_abs_R"] = m;
        rep["points"] = pts.size();
    }
    rep["layout"] = "R[k][a][b][j]: component k of R(e_a,e_b)e_j; each derivative appends a last index";
    detail::finish(rep, g.verify_geometry(pts, detail::tol_or(o, 1e-10)));
    return rep;
}

inline json cmd_verify_geometry(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    json rep = detail::header("verify-geometry", g.structure());
    rep["backend"] = g.uses_jets() ? "jet" : "symbolic";
    auto pts = detail::sample_points(g.structure(), o);
    rep["points"] = pts.size();
    detail::finish(rep, g.verify_geometry(pts, detail::tol_or(o, 1e-10)));
    return rep;
}

inline json cmd_dim(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    Point q = detail::point_or_origin(s, o.at);
    auto sp = generator_space(g, q, detail::space_options(o));
    json rep = detail::header("dim", s);
    rep["dims"] = sp.dims;
    rep["dim_i"] = sp.dim();
    rep["certified"] = sp.certified;
    rep["at"] = to_json(q);
    rep["m_used"] = sp.m_used;
    const int bound = (s.n() + 1) * (s.n() + 1);
    rep["bound"] = bound;
    rep["unknowns"] = Generator::unknowns(g.rank());
    rep["threshold"] = sp.threshold;
    rep["singular_values"] = sp.singular_values;
    json basis = json::array();
    for (const auto& b : sp.basis) basis.push_back(to_json(b));
    rep["basis"] = basis;
    if (!sp.note.empty()) rep["note"] = sp.note;
    double increase = 0.0;
    for (std::size_t i = 1; i < sp.dims.size(); ++i) increase = std::max(increase, double(sp.dims[i] - sp.dims[i - 1]));
    Generator reeb = Generator::zero(g.rank(), q);
    reeb.c = 1.0;
    const double rr = sp.membership_residual(reeb);
    const double rt = detail::tol_or(o, 1e-10);
    detail::finish(rep, {detail::count_check("dims_nonincreasing", increase),
                         detail::count_check("dimension_bound", std::max(0, sp.dim() - bound)),
                         {"reeb_generator", rr, 1, rt, rr < rt}});
    return rep;
}

inline json cmd_prolong(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    if (o.curves.size() != 1) throw InputError("prolong needs exactly one --curve");
    if (o.gen.empty()) throw InputError("prolong needs --gen");
    auto curve = load_curve(o.curves[0], static_cast<std::size_t>(s.dim())).curve();
    auto gen = load_generator(o.gen, s);
    auto r = transport(g, gen, curve, o.step);
    json rep = detail::header("prolong", s);
    rep["start"] = to_json(gen);
    rep["end"] = to_json(r.end);
    rep["steps"] = r.steps;
    rep["step"] = (curve.t1 - curve.t0) / static_cast<double>(r.steps);
    rep["skew_drift"] = r.skew_drift;
    rep["vertical_speed"] = r.vertical_speed;
    const double start_res = generator_space(g, gen.q).membership_residual(gen);
    rep["start_membership_residual"] = start_res;
    std::vector<Check> checks;
    const double skew_tol = detail::tol_or(o, 1e-8);
    checks.push_back({"skew", r.skew_drift, r.steps, skew_tol, r.skew_drift < skew_tol});
    if (o.require_horizontal) {
        const double ht = detail::tol_or(o, 1e-9);
        checks.push_back({"horizontal", r.vertical_speed, 2 * r.steps + 1, ht, r.vertical_speed < ht});
    }
    if (start_res < 1e-8) {
        const double end_res = generator_space(g, r.end.q).membership_residual(r.end);
        const double mt = detail::tol_or(o, 1e-6);
        checks.push_back({"membership", end_res, 1, mt, end_res < mt});
    }
    detail::finish(rep, checks);
    return rep;
}

inline json cmd_path_check(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    if (o.curves.size() != 2) throw InputError("path-check needs exactly two --curve options");
    if (o.gen.empty()) throw InputError("path-check needs --gen");
    const auto d = static_cast<std::size_t>(s.dim());
    auto c1 = load_curve(o.curves[0], d).curve();
    auto c2 = load_curve(o.curves[1], d).curve();
    auto gen = load_generator(o.gen, s);
    auto r = path_independence(g, gen, c1, c2, o.step);
    json rep = detail::header("path-check", s);
    rep["deviation"] = r.deviation;
    rep["end_first"] = to_json(r.first.end);
    rep["end_second"] = to_json(r.second.end);
    rep["steps"] = json::array({r.first.steps, r.second.steps});
    const double t = detail::tol_or(o, 1e-6);
    detail::finish(rep, {{"path_independence", r.deviation, 1, t, r.deviation < t}});
    return rep;
}

inline json field_json(const ContactStructure& s, const DiscreteField& f, const std::string& grid) {
    json pts = json::array();
    for (std::size_t k = 0; k < f.points.size(); ++k) {
        json e = to_json(f.values[k]);
        e["Z"] = to_json(f.Z[k]);
        pts.push_back(e);
    }
    return json{{"grid", grid}, {"coords", s.coords()}, {"points", pts}};
}

inline json cmd_reconstruct(const Options& o, std::string& field_out) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    if (o.gen.empty()) throw InputError("reconstruct needs --gen");
    if (o.grid.empty()) throw InputError("reconstruct needs --grid");
    auto gen = load_generator(o.gen, s);
    auto grid = parse_grid(o.grid, s.coords());
    auto f = reconstruct_field(g, gen, grid, o.step);
    json rep = detail::header("reconstruct", s);
    rep["grid"] = o.grid;
    rep["points"] = f.points.size();
    rep["skew_drift"] = f.skew_drift;
    if (o.out.empty())
        rep["field"] = field_json(s, f, o.grid);
    else {
        rep["field_file"] = o.out;
        field_out = dump(field_json(s, f, o.grid)) + "\n";
    }
    auto checks = verify_field(g, f, detail::tol_or(o, 1e-4));
    detail::finish(rep, checks);
    return rep;
}

inline json cmd_verify(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    s.require_chart("verify");
    if (o.field.empty()) throw InputError("verify needs --field \"<expr>,...\"");
    std::vector<Expr> z;
    for (const auto& part : split_list(o.field, ',')) {
        try {
            z.push_back(parse_expression(part, s.coords()));
        } catch (const ParseError& e) {
            throw InputError(std::string("--field: ") + e.what());
        }
    }
    if (static_cast<int>(z.size()) != s.dim())
        throw InputError("--field has " + std::to_string(z.size()) + " components, expected " + std::to_string(s.dim()));
    auto pts = detail::sample_points(s, o);
    const double tol = detail::tol_or(o, 1e-9);
    json rep = detail::header("verify", s);
    rep["field"] = strings(z);
    rep["points"] = pts.size();
    auto checks = verify_killing(g, z, pts, tol);
    for (auto& c : riemannian_extension_check(g, z, pts, tol)) checks.push_back(c);
    detail::finish(rep, checks);
    return rep;
}

inline json cmd_scan(const Options& o) {
    Geometry g(detail::load(o), parse_backend(o.backend));
    const auto& s = g.structure();
    GridSpec grid;
    if (s.mode() == Mode::Chart)
        grid = o.grid.empty() ? GridSpec::uniform(s.coords(), s.box(), 5) : parse_grid(o.grid, s.coords());
    auto m = scan_regularity(g, grid, detail::space_options(o));
    json rep = detail::header("scan", s);
    std::set<int> distinct(m.dims.begin(), m.dims.end());
    std::size_t regular = 0, interior = 0, interior_regular = 0, certified = 0;
    for (std::size_t k = 0; k < m.dims.size(); ++k) {
        regular += m.regular[k];
        certified += m.certified[k];
        if (!m.homogeneous && grid.interior(k)) {
            ++interior;
            interior_regular += m.regular[k];
        }
    }
    rep["points"] = m.dims.size();
    rep["homogeneous"] = m.homogeneous;
    rep["distinct_dims"] = std::vector<int>(distinct.begin(), distinct.end());
    rep["regular"] = regular;
    rep["interior"] = interior;
    rep["interior_regular"] = interior_regular;
    rep["certified"] = certified;
    rep["semicontinuity_violations"] = m.semicontinuity_violations;
    rep["dims"] = m.dims;
    detail::finish(rep, {detail::count_check("semicontinuity", static_cast<double>(m.semicontinuity_violations))});
    return rep;
}

// --- entry point ------------------------------------------------------------

inline json error_record(const std::string& command, const std::string& kind, const std::string& message) {
    return json{{"tool", "srkilling"},
                {"version", version},
                {"command", command},
                {"error", json{{"kind", kind}, {"message", message}}},
                {"pass", false}};
}

/// Runs one command line (without the program name). Exit codes: 0 all checks
/// pass, 2 input error, 3 a check failed.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"srkilling: Killing fields of contact sub-Riemannian structures"};
    app.set_version_flag("--version", version);
    app.footer(
        "A generator (X, A, c) at q holds the horizontal part X of a Killing field Z, the skew matrix\n"
        "A = A_Z acting on frame components, and c = alpha(Z). Generators of Killing fields satisfy\n"
        "the linear conditions D(nabla^i R) = 0 and D(nabla^i dalpha) = 0; dim solves them up to order m.\n"
        "Exit status: 0 all checks pass, 2 input error (an error record is printed), 3 a check failed.");
    app.require_subcommand(1);
    app.add_option("--tol", o.tol, "override the tolerance of the reported checks");
    app.add_option("--grid", o.grid, "grid spec name:lo:hi:count,... in coordinate order");
    app.add_option("--out", o.out, "write the report (reconstruct: the field) to this file");
    app.add_flag("--pretty", o.pretty, "render a human-readable table instead of JSON");
    app.add_option("--seed", o.seed, "seed of the random sample points (default 0)");
    app.add_option("--backend", o.backend, "auto, symbolic or jet (default auto)");
    app.add_option("--samples", o.samples, "number of random sample points when no grid is given (default 100)");

    auto sub = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        s->fallthrough();
        s->add_option("structure,--structure", o.structure, "structure file or built-in (heisenberg:<n>, su2)");
        return s;
    };
    auto* check = sub("check",
                      "normalized contact form, Reeb field and the special condition (the Reeb field is an "
                      "infinitesimal isometry)");
    auto* connection = sub("connection",
                           "coefficients of the metric, torsion-free sub-Riemannian connection in the frame");
    connection->add_option("--at", o.at, "point x=..,y=.. or a comma list in coordinate order");
    auto* curvature = sub("curvature", "curvature R(e_a,e_b)e_j, dα and their covariant derivatives");
    curvature->add_option("--at", o.at, "point");
    curvature->add_option("--order", o.order, "number of covariant derivatives (default 0)");
    auto* vgeom = sub("verify-geometry",
                      "metricity, torsion, both Bianchi identities, R(ξ,·) = 0, skewness of R and the dα identity");
    auto* dim = sub("dim", "dimensions of the generator spaces i_m(q) and a basis of the last one");
    dim->add_option("--at", o.at, "base point");
    dim->add_option("--order", o.order, "auto (default) or a fixed m");
    dim->add_option("--m-max", o.m_max, "largest m tried in auto mode (default 6)");
    auto* prolong = sub("prolong", "transport a generator (X, A, c) along a curve by the prolongation system");
    prolong->add_option("--curve", o.curves, "curve file")->required();
    prolong->add_option("--gen", o.gen, "generator file")->required();
    prolong->add_option("--step", o.step, "RK4 step per unit parameter (default 1e-3)");
    prolong->add_flag("--require-horizontal", o.require_horizontal, "check α(γ') = 0 along the curve");
    auto* pcheck = sub("path-check", "transport one generator along two curves with common endpoints and compare");
    pcheck->add_option("--curve", o.curves, "curve file (twice)")->required();
    pcheck->add_option("--gen", o.gen, "generator file")->required();
    pcheck->add_option("--step", o.step, "RK4 step per unit parameter (default 1e-3)");
    auto* recon = sub("reconstruct",
                      "rebuild the Killing field of a generator on a grid by transport and check its equations");
    recon->add_option("--gen", o.gen, "generator file")->required();
    recon->add_option("--step", o.step, "RK4 step per unit parameter (default 1e-3)");
    auto* verify = sub("verify", "check the Killing identities of a vector field given by coordinate expressions");
    verify->add_option("--field", o.field, "comma-separated coordinate components")->required();
    auto* scan = sub("scan", "dimension of the isometry generator space on a grid and its regular points");
    scan->add_option("--m-max", o.m_max, "largest m tried (default 6)");

    std::vector<const char*> argv{"srkilling"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::string command = "?";
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        out << version << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
        out << dump(error_record(command, "usage", e.what())) << "\n";
        return 2;
    }
    command = app.get_subcommands().front()->get_name();

    json rep;
    std::string field_out;
    try {
        if (check->parsed()) rep = cmd_check(o);
        else if (connection->parsed()) rep = cmd_connection(o);
        else if (curvature->parsed()) rep = cmd_curvature(o);
        else if (vgeom->parsed()) rep = cmd_verify_geometry(o);
        else if (dim->parsed()) rep = cmd_dim(o);
        else if (prolong->parsed()) rep = cmd_prolong(o);
        else if (pcheck->parsed()) rep = cmd_path_check(o);
        else if (recon->parsed()) rep = cmd_reconstruct(o, field_out);
        else if (verify->parsed()) rep = cmd_verify(o);
        else if (scan->parsed()) rep = cmd_scan(o);
    } catch (const GeometryError& e) {
        rep = error_record(command, "geometry", e.what());
    } catch (const LimitError& e) {
        rep = error_record(command, "limit", e.what());
    } catch (const ParseError& e) {
        rep = error_record(command, "parse", e.what());
    } catch (const Error& e) {
        rep = error_record(command, "input", e.what());
    }
    const bool failed_input = rep.contains("error");
    std::string text = o.pretty && !failed_input ? pretty(rep) : dump(rep) + "\n";
    const bool report_to_file = !o.out.empty() && command != "reconstruct" && !failed_input;
    if (!field_out.empty() || report_to_file) {
        std::ofstream f(o.out);
        if (!f) {
            out << dump(error_record(command, "input", "cannot write '" + o.out + "'")) << "\n";
            return 2;
        }
        f << (report_to_file ? text : field_out);
    }
    if (!report_to_file) out << text;
    if (failed_input) {
        err << "srkilling: " << rep["error"]["message"].get<std::string>() << "\n";
        return 2;
    }
    return rep["pass"].get<bool>() ? 0 : 3;
}

} // namespace srk::cli
