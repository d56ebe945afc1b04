#pragma once

// Curve and generator files.
//
//     [curve]      t_range = <t0> <t1> ; gamma = <expr in t>, ...
//     [generator]  X = <reals> ; A = <strictly lower triangle, rows separated by ';'> ; c = <real> ; at = <point>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "srkilling/killing.hpp"

namespace srk {

namespace detail {

inline std::string read_text(const std::string& path, const char* what) {
    std::ifstream f(path);
    if (!f) throw InputError(std::string("cannot read ") + what + " file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// key = value lines of one section; '#' starts a comment.
inline std::map<std::string, std::string> read_section(const std::string& text, const std::string& section,
                                                       const std::string& source) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool seen = false;
    auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line != "[" + section + "]") throw InputError(where() + "expected section [" + section + "]");
            if (seen) throw InputError(where() + "duplicate section [" + section + "]");
            seen = true;
            continue;
        }
        if (!seen) throw InputError(where() + "entry outside [" + section + "]");
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where() + "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (out.count(key)) throw InputError(where() + "duplicate key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    if (!seen) throw InputError(source + ": missing section [" + section + "]");
    return out;
}

inline const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key,
                                      const std::string& source) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError(source + ": missing key '" + key + "'");
    return it->second;
}

inline std::vector<double> parse_reals(const std::string& s) {
    std::vector<double> out;
    for (const auto& w : split_words(s)) out.push_back(parse_real(w));
    return out;
}

} // namespace detail

struct CurveFile {
    std::vector<Expr> gamma;
    double t0 = 0.0;
    double t1 = 1.0;
    Curve curve() const { return Curve::from_exprs(gamma, t0, t1); }
};

inline CurveFile parse_curve(const std::string& text, std::size_t dim, const std::string& source = "<curve>") {
    auto kv = detail::read_section(text, "curve", source);
    for (const auto& [k, v] : kv)
        if (k != "t_range" && k != "gamma") throw InputError(source + ": unknown key '" + k + "'");
    CurveFile c;
    auto range = detail::parse_reals(detail::require_key(kv, "t_range", source));
    if (range.size() != 2) throw InputError(source + ": t_range needs two numbers");
    c.t0 = range[0];
    c.t1 = range[1];
    if (!(c.t1 > c.t0)) throw InputError(source + ": t_range needs t0 < t1");
    for (const auto& part : split_list(detail::require_key(kv, "gamma", source), ',')) {
        try {
            c.gamma.push_back(parse_expression(part, {"t"}));
        } catch (const ParseError& e) {
            throw InputError(source + ": gamma: " + e.what());
        }
    }
    if (c.gamma.size() != dim)
        throw InputError(source + ": gamma has " + std::to_string(c.gamma.size()) + " components, expected " +
                         std::to_string(dim));
    return c;
}

inline CurveFile load_curve(const std::string& path, std::size_t dim) {
    return parse_curve(detail::read_text(path, "curve"), dim, path);
}

inline Generator parse_generator(const std::string& text, const ContactStructure& s,
                                 const std::string& source = "<generator>") {
    auto kv = detail::read_section(text, "generator", source);
    for (const auto& [k, v] : kv)
        if (k != "X" && k != "A" && k != "c" && k != "at") throw InputError(source + ": unknown key '" + k + "'");
    const int h = s.rank();
    auto X = detail::parse_reals(detail::require_key(kv, "X", source));
    if (static_cast<int>(X.size()) != h)
        throw InputError(source + ": X has " + std::to_string(X.size()) + " entries, expected " + std::to_string(h));
    auto c = detail::parse_reals(detail::require_key(kv, "c", source));
    if (c.size() != 1) throw InputError(source + ": c must be one number");
    Point q = parse_point(detail::require_key(kv, "at", source), s.coords(), static_cast<std::size_t>(s.dim()));
    Generator g = Generator::zero(h, q);
    for (int i = 0; i < h; ++i) g.X[i] = X[static_cast<std::size_t>(i)];
    g.c = c[0];
    auto rows = split_list(detail::require_key(kv, "A", source), ';');
    if (static_cast<int>(rows.size()) != h - 1)
        throw InputError(source + ": A needs " + std::to_string(h - 1) + " rows separated by ';'");
    for (int p = 1; p < h; ++p) {
        auto row = detail::parse_reals(rows[static_cast<std::size_t>(p - 1)]);
        if (static_cast<int>(row.size()) != p)
            throw InputError(source + ": row " + std::to_string(p) + " of A needs " + std::to_string(p) + " entries");
        for (int r = 0; r < p; ++r) {
            g.A(p, r) = row[static_cast<std::size_t>(r)];
            g.A(r, p) = -row[static_cast<std::size_t>(r)];
        }
    }
    return g;
}

inline Generator load_generator(const std::string& path, const ContactStructure& s) {
    return parse_generator(detail::read_text(path, "generator"), s, path);
}

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_generator(const Generator& g) {
    std::ostringstream os;
    os << "[generator]\nX =";
    for (int i = 0; i < g.rank(); ++i) os << ' ' << format_real(g.X[i]);
    os << "\nA =";
    for (int p = 1; p < g.rank(); ++p) {
        if (p > 1) os << " ;";
        for (int r = 0; r < p; ++r) os << ' ' << format_real(g.A(p, r));
    }
    os << "\nc = " << format_real(g.c) << "\nat =";
    for (std::size_t i = 0; i < g.q.size(); ++i) os << (i ? ", " : " ") << format_real(g.q[i]);
    os << "\n";
    return os.str();
}

} // namespace srk
